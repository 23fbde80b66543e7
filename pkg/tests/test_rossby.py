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

import json
import math
import os

import numpy as np
from numpy.testing import assert_allclose
import pytest

from errors import ConsistencyError, ValidationError
from model_core import Grid
from rossby import (SpectralState, decompose, gaussian_packet, local_energy,
                    propagate, propagate_vorticity, resolved_modes,
                    rossby_frequency, run_rossby, streamfunction_velocity,
                    velocity_from_vorticity, vorticity)
import utilities

DATA = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def grid():
    return Grid(nx=64, ny=64, nz=4, half_width=6.0)


@pytest.fixture
def packet(grid):
    return streamfunction_velocity(gaussian_packet(grid), grid)


def test_frequency():
    assert rossby_frequency(1.0, 0.0, 1.0, 0.1) == pytest.approx(10.0)
    assert rossby_frequency(-2.0, 2.0, 3.0, 0.5) == pytest.approx(-1.5)
    assert_allclose(rossby_frequency(np.array([0.0, 1.0]), np.zeros(2), 1.0,
                                     1.0), [0.0, 1.0])
    with pytest.raises(ValidationError):
        rossby_frequency(0.0, 0.0, 1.0, 0.1)


def test_single_mode_half_period(grid):
    X, _ = grid.mesh()
    # psi = cos x: one zonal wavenumber, no y dependence.
    v0 = np.stack([np.zeros_like(X), -np.sin(X)])
    state = SpectralState.from_velocity(v0, grid, epsilon=0.1)
    later = propagate(state, math.pi / 10)
    assert later.time == pytest.approx(math.pi / 10)
    assert_allclose(later.velocity(), -v0, atol=1e-12)


def test_energy(packet, grid):
    state = SpectralState.from_velocity(packet, grid, epsilon=0.01)
    e0 = state.energy()
    assert propagate(state, 0.7).energy() == pytest.approx(e0, rel=1e-10)

    viscous = SpectralState.from_velocity(packet, grid, epsilon=0.01,
                                          nu_h=0.01)
    assert propagate(viscous, 0.7).energy() < e0


def test_divergent_velocity_rejected(grid):
    X, _ = grid.mesh()
    with pytest.raises(ConsistencyError):
        SpectralState.from_velocity(np.stack([np.cos(X), np.zeros_like(X)]),
                                    grid, epsilon=0.1)


def test_decompose(packet, grid):
    _, Y = grid.mesh()
    v0 = packet + np.stack([0.1 * np.exp(-Y**2), np.zeros_like(Y)])
    zonal, rossby = decompose(v0, grid)
    # The packet itself carries a small zonal mean.
    assert_allclose(zonal.values[0], 0.1 * np.exp(-Y**2)
                    + packet[0].mean(axis=0, keepdims=True), atol=1e-12)
    assert_allclose(zonal.values[1], 0, atol=1e-12)
    assert_allclose(rossby.values.mean(axis=1), 0, atol=1e-12)
    assert_allclose(zonal.values + rossby.values, v0)


def test_vorticity(packet, grid):
    state = SpectralState.from_velocity(packet, grid, epsilon=0.01)
    zeta = vorticity(state)
    scale = np.max(np.abs(state.coefficients))
    assert_allclose(velocity_from_vorticity(zeta, grid),
                    state.coefficients, rtol=0, atol=1e-12 * scale)
    # Nothing survives on the Nyquist row and column.
    assert not np.any(state.coefficients[:, ~resolved_modes(grid)])

    later = propagate(state, 0.3)
    assert_allclose(propagate_vorticity(zeta, state, 0.3), vorticity(later),
                    atol=1e-10)


def test_local_energy(packet, grid):
    state = SpectralState.from_velocity(packet, grid, epsilon=0.01)
    whole = local_energy(state, (0.0, 2 * math.pi, -6.0, 6.0))
    assert whole == pytest.approx(state.energy(), rel=1e-3)
    assert local_energy(state, (math.pi - 1, math.pi + 1, -1.0, 1.0)) == \
        pytest.approx(whole, rel=0.05)

    with pytest.raises(ValidationError):
        local_energy(state, (1.0, 0.5, -1.0, 1.0))
    with pytest.raises(ValidationError):
        local_energy(state, (0.0, 1.0, -7.0, 1.0))


def test_packet_leaves_its_box():
    with open(os.path.join(DATA, "rossby_packet.json"), "r",
              encoding="ascii") as f:
        ref = json.load(f)

    fractions = []
    for name in ("grid", "reference_grid"):
        grid = Grid(**ref[name])
        v0 = streamfunction_velocity(gaussian_packet(grid, **ref["packet"]),
                                     grid)
        run = run_rossby(v0, grid, ref["epsilon"], ref["beta"], 0.0,
                         np.array(ref["times"]), tuple(ref["box"]))
        assert len(run.snapshots) == len(ref["times"])
        assert_allclose(run.total_energy, run.total_energy[0], rtol=1e-12)
        assert run.final_vorticity.shape == (grid.nx, grid.ny)
        fractions.append(run.to_json()["local_fraction"])

    coarse, fine = fractions
    assert coarse[0] == pytest.approx(1.0)
    assert_allclose(coarse, fine, atol=ref["agreement"])
    assert fine[-1] < ref["threshold"]
    assert coarse[-1] < ref["threshold"]


def test_semigroup(packet, grid):
    state = SpectralState.from_velocity(packet, grid, epsilon=0.01,
                                        nu_h=0.01)
    scale = np.max(np.abs(state.coefficients))
    twice = propagate(propagate(state, 0.3), 0.4)
    once = propagate(state, 0.7)
    assert twice.time == pytest.approx(once.time)
    assert_allclose(twice.coefficients, once.coefficients, rtol=0,
                    atol=1e-12 * scale)


def test_energy_conserved_over_long_times(packet, grid):
    state = SpectralState.from_velocity(packet, grid, epsilon=0.01)
    e0 = state.energy()
    for t in (1.0, 5.0, 10.0):
        assert propagate(state, t).energy() == pytest.approx(e0, rel=1e-12)


def test_zonal_mode_heat_factor(grid):
    _, Y = grid.mesh()
    xi = 3 * math.pi / grid.half_width
    v0 = np.stack([np.cos(xi * Y), np.zeros_like(Y)])
    nu, t = 0.05, 2.0
    state = SpectralState.from_velocity(v0, grid, epsilon=0.01, nu_h=nu)
    assert_allclose(propagate(state, t).velocity(),
                    math.exp(-nu * xi**2 * t) * v0, atol=1e-12)
    # Without viscosity the zonal flow does not move.
    still = SpectralState.from_velocity(v0, grid, epsilon=0.01)
    assert_allclose(propagate(still, t).velocity(), v0, atol=1e-12)


def test_zonal_flow_decays_in_a_run(packet, grid):
    _, Y = grid.mesh()
    profile = np.exp(-grid.y**2)
    v0 = packet + np.stack([np.broadcast_to(profile, Y.shape),
                            np.zeros_like(Y)])
    nu, t = 0.05, 1.0
    run = run_rossby(v0, grid, 0.01, 1.0, nu, np.array([0.0, t]),
                     (math.pi - 1, math.pi + 1, -1.0, 1.0))

    xi = utilities.wavenumbers(grid.ny, 2 * grid.half_width)
    zonal0 = v0[0].mean(axis=0)
    expected = np.fft.ifft(np.fft.fft(zonal0)
                           * np.exp(-nu * xi**2 * t)).real
    assert_allclose(run.snapshots[-1][0].mean(axis=0), expected, atol=1e-10)
    assert run.zonal_energy[-1] < run.zonal_energy[0]
    assert run.total_energy[-1] < run.total_energy[0]



@pytest.mark.parametrize("times", [[0.0, 1.0, 0.5], [-1.0, 0.0]])
def test_invalid_times(packet, grid, times):
    with pytest.raises(ValidationError):
        run_rossby(packet, grid, 0.01, 1.0, 0.0, np.array(times),
                   (1.0, 2.0, -1.0, 1.0))


def test_negative_time(packet, grid):
    state = SpectralState.from_velocity(packet, grid, epsilon=0.01)
    with pytest.raises(ValidationError):
        propagate(state, -0.1)
