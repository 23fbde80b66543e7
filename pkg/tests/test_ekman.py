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

import numpy as np
from numpy.testing import assert_allclose
import pytest

from conftest import SINE
from ekman import (BoundaryLayerProfile, bl_pressure, bl_velocity_3,
                   bl_velocity_h, column_l2_norms, ekman_pumping,
                   layer_norms, sample_bl_field, sample_bl_layer)
from errors import HypothesisError, SingularPointError
from model_core import (Grid, Parameters, SeparableStress, StressComponent,
                        truncate_coriolis)


X0 = np.array([0.3, 1.0, 4.0])
Y0 = np.array([-1.3, 0.05, 0.5])


@pytest.fixture
def profile(stress, tc, params):
    return BoundaryLayerProfile(stress, tc, params.epsilon)


def test_surface_stress(profile):
    t = profile.terms(X0, Y0)
    sigma = profile.stress.sigma(X0, Y0)
    # d/dz = -(1/eps) d/dzeta, so eps^2 dz U_h = sigma at the surface.
    assert_allclose(t.dzeta_velocity_h(0.0), -sigma / profile.epsilon,
                    atol=1e-12)


def test_decay(profile):
    far = bl_velocity_h(profile, X0, Y0, 200.0)
    assert np.max(np.abs(far)) < 1e-12
    assert np.max(np.abs(bl_velocity_3(profile, X0, Y0, 200.0))) < 1e-12


def test_surface_vertical_velocity_cancels_pumping(profile, stress, tc):
    u3 = bl_velocity_3(profile, X0, Y0, 0.0)
    assert_allclose(u3, -ekman_pumping(stress, tc, X0, Y0), rtol=1e-10,
                    atol=1e-12)


def test_divergence_free(profile):
    x, y = np.array([1.0]), np.array([0.5])
    zeta = np.array([0.0, 0.4, 1.7])
    t = profile.terms(x, y)
    h = 1e-6

    # div_h U_h against finite differences of U_h.
    ux = (bl_velocity_h(profile, x + h, y, zeta)[0]
          - bl_velocity_h(profile, x - h, y, zeta)[0]) / (2 * h)
    vy = (bl_velocity_h(profile, x, y + h, zeta)[1]
          - bl_velocity_h(profile, x, y - h, zeta)[1]) / (2 * h)
    assert_allclose(t.div_velocity_h(zeta), ux + vy, rtol=1e-5, atol=1e-6)

    # dz U_3 = -(1/eps) dzeta U_3 balances div_h U_h.
    w_zeta = (t.velocity_3(zeta + h) - t.velocity_3(zeta - h)) / (2 * h)
    assert_allclose(w_zeta, profile.epsilon * t.div_velocity_h(zeta),
                    rtol=1e-5, atol=1e-8)
    assert_allclose(bl_pressure(profile, x, y, zeta),
                    -profile.epsilon**2 * t.dzeta_velocity_3(zeta))


def test_equator_and_negative_zeta(profile):
    with pytest.raises(SingularPointError):
        profile.terms(np.array([1.0]), np.array([0.0]))
    with pytest.raises(ValueError):
        bl_velocity_h(profile, X0, Y0, -1.0)


def test_column_norm_closed_form(linear):
    # sigma = (0, 1) at (pi/2, 1) where b_delta = b = 1.
    stress = SeparableStress(
        StressComponent(amplitude=0.0),
        StressComponent(amplitude=1.0, power=0, wavenumber=1, phase=SINE))
    tc = truncate_coriolis(linear, delta=0.1, alpha=0.7)
    cols = column_l2_norms(BoundaryLayerProfile(stress, tc, 1.0),
                           np.array([math.pi / 2]), np.array([1.0]))
    assert cols.horizontal[0] == pytest.approx(1 / math.sqrt(2))
    assert cols.horizontal_quadrature[0] == pytest.approx(1 / math.sqrt(2),
                                                          rel=1e-8)


def test_column_norms_agree(profile):
    X, Y = np.meshgrid(X0, Y0, indexing="ij")
    cols = column_l2_norms(profile, X, Y)
    assert cols.horizontal.shape == X.shape
    assert_allclose(cols.horizontal_quadrature, cols.horizontal, rtol=1e-8,
                    atol=1e-14)
    assert np.all(cols.vertical >= 0)


def test_layer_norms(profile, grid):
    norms = layer_norms(profile, grid)
    assert norms.velocity_h > 0 and norms.velocity_3 > 0
    assert 0 < norms.truncation < norms.velocity_h
    assert norms.grad_pressure is None

    with_grad = layer_norms(profile, grid, gradients=True)
    assert with_grad.velocity_h == pytest.approx(norms.velocity_h)
    assert np.isfinite(with_grad.grad_velocity_3)
    assert with_grad.grad_pressure > 0


def test_gradient_guard_reads_the_truncation(stress, linear, grid):
    weak = truncate_coriolis(linear, delta=0.1, alpha=0.55)
    with pytest.raises(HypothesisError) as e:
        layer_norms(BoundaryLayerProfile(stress, weak, 0.1), grid,
                    gradients=True)
    assert e.value.hypothesis == "alpha-gradient-guard"
    # Without gradients any alpha is fine.
    assert layer_norms(BoundaryLayerProfile(stress, weak, 0.1),
                       grid).velocity_h > 0


def test_sampled_layer(profile):
    grid = Grid(nx=4, ny=8, nz=801, half_width=4.0)
    field = sample_bl_field(profile, grid)
    assert field.values.shape == (3, 4, 8, 801)

    layer = sample_bl_layer(profile, grid)
    assert_allclose(layer.velocity, field.values)

    dz_p = np.gradient(layer.pressure, grid.dz, axis=-1)
    scale = np.max(np.abs(layer.dz_pressure))
    assert np.max(np.abs(dz_p - layer.dz_pressure)[..., 1:-1]) < 1e-2 * scale

    dz_u = np.gradient(layer.velocity[0], grid.dz, axis=-1)
    dzz_u = np.gradient(dz_u, grid.dz, axis=-1)
    scale = np.max(np.abs(layer.dzz_velocity[0]))
    assert np.max(np.abs(dzz_u - layer.dzz_velocity[0])[..., 2:-2]) < \
        2e-2 * scale


def test_pumping_away_from_truncation(stress, linear):
    # Away from the truncation band b_delta = b = y.
    tc = truncate_coriolis(linear, delta=0.01, alpha=0.7)
    x, y = np.array([0.7, 2.0]), np.array([1.5, -2.5])
    s = stress.sample(x, y)
    expected = s.dx[1] / y - s.dy[0] / y + s.sigma[0] / y**2
    assert_allclose(ekman_pumping(stress, tc, x, y), expected)
    # sigma_1 = 0 here: w reduces to dx sigma_2 / y.
    assert_allclose(ekman_pumping(stress, tc, x, y), s.dx[1] / y)


def test_theorem_scaling_profile_is_finite(stress, linear):
    params = Parameters.theorem_scaling(0.05)
    tc = truncate_coriolis(linear, params.delta, params.alpha)
    t = BoundaryLayerProfile(stress, tc, params.epsilon).terms(X0[:, None],
                                                               Y0[:, None])
    u = t.velocity_h(np.linspace(0, 10, 5))
    assert u.shape == (2, 3, 5)
    assert np.all(np.isfinite(u))
