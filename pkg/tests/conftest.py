# Copyright 2023 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import pytest

from model_core import (Grid, Parameters, SeparableStress, StressComponent,
                        coriolis_profile, truncate_coriolis)

# sin x = cos(x - pi/2)
SINE = -math.pi / 2


def meridional_stress(power: int = 2, amplitude: float = 1.0,
                      order: int = 2) -> SeparableStress:
    """sigma = (0, amplitude y^power exp(-y^2) sin x)."""
    return SeparableStress(
        StressComponent(amplitude=0.0),
        StressComponent(amplitude=amplitude, power=power, width=1.0,
                        wavenumber=1, phase=SINE),
        order=order)


@pytest.fixture
def grid() -> Grid:
    # dy = 1/8: four latitudes within 1/4 of the equator.
    return Grid(nx=16, ny=64, nz=41, half_width=4.0)


@pytest.fixture
def stress() -> SeparableStress:
    return meridional_stress()


@pytest.fixture
def params() -> Parameters:
    return Parameters.theorem_scaling(0.1)


@pytest.fixture
def linear():
    return coriolis_profile("linear", beta=1.0)


@pytest.fixture
def tc(linear, params):
    return truncate_coriolis(linear, params.delta, params.alpha)
