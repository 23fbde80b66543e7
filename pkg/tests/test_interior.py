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

import numpy as np
from numpy.testing import assert_allclose
import pytest

from conftest import meridional_stress
from errors import CompatibilityError, ConsistencyError, ValidationError
import ekman
from interior import (assemble_stationary, build_interior, interior_pressure,
                      sverdrup_meridional, vertical_velocity, zonal_velocity)
from model_core import Field, Grid, StressComponent
import utilities


@pytest.fixture
def fields(stress, tc, grid):
    return build_interior(stress, tc, grid)


@pytest.fixture
def solution(params, tc, stress, grid):
    return assemble_stationary(params, tc, stress, grid)


def test_sverdrup_balance(fields, tc, grid):
    y = grid.y
    assert_allclose(tc.base.db(y) * fields.u_h[1], tc.base.b(y) * fields.w)
    u2 = sverdrup_meridional(fields.w, tc, grid)
    assert_allclose(u2.values[0], fields.u_h[1])


def test_vertical_velocity(fields, grid):
    u3 = vertical_velocity(fields.w, grid)
    assert u3.values.shape == (1, grid.nx, grid.ny, grid.nz)
    assert_allclose(u3.values[0, ..., 0], 0)
    assert_allclose(u3.values[0, ..., -1], fields.w)
    assert_allclose(fields.u3(grid.z), u3.values[0])


def test_interior_is_divergence_free(fields, grid):
    div = (utilities.spectral_dx(fields.u_h[0], axis=0)
           + utilities.fd_dy(fields.u_h[1], grid.dy, axis=1)
           + fields.w)
    assert np.max(np.abs(div)) < 0.05 * np.max(np.abs(fields.w))


def test_zonal_velocity_has_zero_mean(fields):
    assert_allclose(fields.u_h[0].mean(axis=0), 0, atol=1e-12)


def test_geostrophic_pressure(fields, tc, grid):
    b = tc.base.b(grid.y)
    assert_allclose(utilities.spectral_dx(fields.p, axis=0),
                    b * fields.u_h[1], atol=1e-10)
    assert_allclose(fields.grad_p[0], b * fields.u_h[1])
    assert_allclose(fields.grad_p[1], -b * fields.u_h[0])
    assert abs(fields.p.mean()) < 1e-12


def test_incompatible_pumping(tc, grid):
    w = np.ones((grid.nx, grid.ny))
    with pytest.raises(CompatibilityError) as e:
        zonal_velocity(w, tc, grid)
    assert e.value.hypothesis == "compatibility"


def test_non_gradient_coriolis_force(tc, grid):
    X, Y = grid.mesh()
    u_h = np.stack([np.zeros_like(X), np.cos(X) * np.exp(-Y**2)])
    with pytest.raises(ConsistencyError):
        interior_pressure(Field(grid, u_h), tc)


def test_boundary_conditions(solution):
    residuals = solution.boundary_residuals()
    assert set(residuals) == {"bottom_shear", "bottom_vertical_velocity",
                              "top_shear", "top_vertical_velocity"}
    for name, value in residuals.items():
        assert value < 1e-10, name


def test_solution_layout(solution, grid):
    u = solution.velocity()
    assert u.shape == (3, grid.nx, grid.ny, grid.nz)
    assert solution.pressure().shape == (grid.nx, grid.ny, grid.nz)
    assert_allclose(u, solution.layer.velocity
                    + solution.interior_velocity()
                    + solution.corrector.velocity)

    # The interior part alone is divergence free up to the y stencil.
    div = solution.divergence(solution.interior_velocity())
    assert np.max(np.abs(div)) < 0.05 * np.max(np.abs(solution.interior.w))

    doc = solution.to_json()
    assert set(doc) == {"parameters", "grid", "norms", "boundary_residuals",
                        "delta_conditions"}
    assert doc["norms"]["layer_h"] > 0 and doc["norms"]["interior_h"] > 0


def test_corrector_bottom_flux(solution, params):
    x, y = solution.grid.mesh()
    t = solution.profile.terms(x, y)
    corr = solution.corrector
    assert_allclose(corr.phi_3, -t.velocity_3(1 / params.epsilon))
    # v_3 at the surface vanishes and at the bottom cancels the layer flux.
    assert_allclose(corr.velocity[2, ..., -1], 0, atol=1e-14)
    assert_allclose(corr.velocity[2, ..., 0], corr.phi_3, atol=1e-12)


def test_gamma_scaling_required(params, tc, stress, grid):
    with pytest.raises(ValidationError) as e:
        assemble_stationary(params.replace(gamma=1.0), tc, stress, grid)
    assert e.value.hypothesis == "gamma-scaling"


def test_incompatible_stress_rejected(params, tc, grid):
    stress = meridional_stress()
    stress.components = (StressComponent(amplitude=1.0, power=2, width=1.0,
                                         offset=1.0),
                         stress.components[1])
    with pytest.raises(CompatibilityError):
        assemble_stationary(params, tc, stress, grid)


def test_pumping_field(fields, stress, tc, grid):
    X, Y = grid.mesh()
    assert_allclose(fields.w, ekman.ekman_pumping(stress, tc, X, Y))


def curl_defect(u_h: Field, tc) -> float:
    with pytest.raises(ConsistencyError) as e:
        interior_pressure(u_h, tc, integrability_tol=1e-12, stencil_coef=0.0)
    return e.value.details["defect"] / e.value.details["scale"]


def test_integrability_gate_follows_the_stencil(stress, tc):
    defects = []
    for ny in (64, 128, 256):
        grid = Grid(nx=16, ny=ny, nz=5, half_width=4.0)
        # The default gate accepts the interior at every resolution.
        fields = build_interior(stress, tc, grid)
        defects.append(curl_defect(Field(grid, fields.u_h), tc))
    assert defects[0] < 8.0 * (8 / 64)**2
    for coarse, fine in zip(defects, defects[1:]):
        assert 3.0 < coarse / fine < 5.0


def test_divergence_is_second_order(params, tc):
    # y^4 keeps the equatorial truncation out of the error.
    stress = meridional_stress(power=4, order=4)
    divergence = []
    for ny, nz in ((64, 41), (128, 81)):
        grid = Grid(nx=16, ny=ny, nz=nz, half_width=4.0)
        sol = assemble_stationary(params, tc, stress, grid)
        divergence.append(Field(grid, sol.divergence()[None]).l2_norm())
    assert divergence[0] / divergence[1] > 3.0
