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

import logging
import math

import numpy as np
import pytest

import utilities
from errors import ValidationError
from interior import assemble_stationary
from model_core import Field, Grid, Parameters
from residual import (GROUPS, PowerRule, TermNorm, apply_stationary_operator,
                      dual_norm, linear_coriolis_factory, measure_residual,
                      scaling_study, study_grid)


@pytest.fixture
def solution(params, tc, stress, grid):
    return assemble_stationary(params, tc, stress, grid)


def test_geostrophic_term_vanishes(solution):
    res = apply_stationary_operator(solution)
    assert np.all(res.terms["geostrophic"] == 0)


def test_residual_layout(solution, grid):
    res = apply_stationary_operator(solution)
    assert res.horizontal.shape == (2, grid.nx, grid.ny, grid.nz)
    assert res.vertical.shape == (1, grid.nx, grid.ny, grid.nz)
    np.testing.assert_allclose(
        res.group("r_h1") + res.group("r_h2"), res.horizontal)
    np.testing.assert_allclose(
        res.group("r_31") + res.group("r_32"), res.vertical)


def test_measure_residual(solution, params):
    report = measure_residual(solution)
    assert report.epsilon == params.epsilon
    assert set(report.groups) == set(GROUPS)
    assert report.terms["geostrophic"].l2 == 0
    assert report.r_h2 > 0
    assert report.r_h2 <= report.groups["r_h2"].l2 + 1e-15

    doc = report.to_json()
    assert "l2_over_sqrt_nu_h" in doc["groups"]["r_h2"]
    assert doc["sizes"]["interior"] == pytest.approx(
        math.hypot(doc["sizes"]["interior_h"], doc["sizes"]["interior_3"]))


def test_term_norm_without_viscosity():
    norm = TermNorm(2.0, 1.0)
    assert norm.to_json(0.0) == {"l2": 2.0, "h_minus_1": 1.0}
    assert norm.to_json(0.25)["l2_over_sqrt_nu_h"] == pytest.approx(4.0)


def test_dual_norm_of_single_mode(caplog):
    grid = Grid(nx=16, ny=32, nz=5, half_width=4.0)
    X, Y = grid.mesh()
    xi = math.pi / 2
    f = Field(grid, (np.cos(X) * np.cos(xi * Y))[None], name="mode")
    with caplog.at_level(logging.WARNING):
        value = dual_norm(f)
    assert value == pytest.approx(f.l2_norm() / math.sqrt(2 + xi**2))
    # cos(xi y) does not vanish at the ends of the strip.
    assert "wrap around" in caplog.text

    volume = Field(grid, np.repeat(f.values[..., None], grid.nz, axis=-1))
    assert dual_norm(volume) == pytest.approx(value)


def test_dual_norm_of_localized_field(caplog):
    grid = Grid(nx=16, ny=64, nz=5, half_width=4.0)
    X, Y = grid.mesh()
    f = Field(grid, (np.cos(X) * np.exp(-Y**2))[None])
    with caplog.at_level(logging.WARNING):
        value = dual_norm(f, wrap_tol=1e-6)
    assert caplog.text == ""
    assert 0 < value < f.l2_norm() / math.sqrt(2)


def test_study_grid(grid):
    assert study_grid(grid, 0.1, 20).nz == 201
    assert study_grid(grid, 0.5, 10).nz == grid.nz


def test_power_rule():
    rule = PowerRule(2.0, 3.0)
    assert rule(0.5) == pytest.approx(0.25)
    assert rule.to_json() == {"factor": 2.0, "exponent": 3.0}


@pytest.mark.parametrize("epsilons", [[0.1, 0.05], [0.1, 0.2, 0.05]])
def test_invalid_epsilon_ladder(epsilons, stress, grid):
    with pytest.raises(ValidationError):
        scaling_study(Parameters.theorem_scaling(0.1), epsilons,
                      linear_coriolis_factory(), stress, grid)


@pytest.mark.slow
def test_scaling_study(stress):
    grid = Grid(nx=8, ny=64, nz=21, half_width=4.0)
    study = scaling_study(Parameters.theorem_scaling(0.1),
                          [0.2, 0.1, 0.05], linear_coriolis_factory(),
                          stress, grid, nu_h_rule=PowerRule(0.0, 3.0),
                          points_per_layer=10, threads=2)

    assert [r.epsilon for r in study.reports] == [0.2, 0.1, 0.05]
    rows = study.rows()
    assert len(rows) == 3
    assert rows[0]["delta"] == pytest.approx(0.2)
    assert all(row["nu_h"] == 0 for row in rows)

    assert study.checks["viscous_terms_vanish"]
    assert "r_h2_over_sqrt_nu_h" not in study.slopes
    assert study.slopes["interior"].within(0.0, 0.05)
    assert study.slopes["layer_h"].within(-0.5, 0.1)
    assert study.checks["interior_exponent"]
    assert study.checks["layer_h_exponent"]

    doc = study.to_json()
    assert doc["passed"] == study.passed
    assert len(doc["reports"]) == 3


@pytest.mark.slow
def test_viscous_scaling_study(stress):
    grid = Grid(nx=8, ny=64, nz=21, half_width=4.0)
    epsilons = [0.1, 0.05, 0.025]
    study = scaling_study(Parameters.theorem_scaling(0.1), epsilons,
                          linear_coriolis_factory(), stress, grid,
                          points_per_layer=10, threads=2)

    rows = study.rows()
    for eps, row in zip(epsilons, rows):
        assert row["nu_h"] == pytest.approx(eps**3)
    assert utilities.strictly_decreasing([row["r_h1"] for row in rows])
    assert utilities.strictly_decreasing(
        [row["r_h2"] / math.sqrt(row["nu_h"]) for row in rows])

    assert study.checks["r_h1_decays"]
    assert study.checks["r_h2_decays"]
    assert "viscous_terms_vanish" not in study.checks
    assert study.passed
