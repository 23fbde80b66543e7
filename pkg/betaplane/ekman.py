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

"""Surface Ekman layer in closed form.

With A^pm = sigma +- i sigma_perp and the decay rates lambda^pm of the
truncated Coriolis factor, the layer velocity in the stretched coordinate
zeta = (1 - z) / epsilon is

    U_h = 1/(2 eps) sum_pm A^pm exp(-lambda^pm zeta) / lambda^pm

and U_3 is the vertical velocity that makes (U_h, U_3) divergence free and
decays as zeta -> infinity. Every quantity below is the sum of the two
conjugate branches, so the real part is taken at the end.
"""

from dataclasses import dataclass
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from errors import SingularPointError
from model_core import (ArrayLike, Field, Grid, StressSample,
                        TruncatedCoriolis, WindStress, decay_rate_slopes,
                        decay_rates)
import utilities

logger = logging.getLogger(__name__)

# Gauss-Laguerre nodes used for the zeta integrals of a column.
LAGUERRE_NODES = 64


@dataclass(frozen=True)
class BoundaryLayerProfile:
    stress: WindStress
    tc: TruncatedCoriolis
    epsilon: float

    def terms(self, x: ArrayLike, y: ArrayLike) -> "_LayerTerms":
        return _LayerTerms(self, x, y)


class _LayerTerms:
    """Per-column coefficients of both branches at broadcast (x, y)."""

    def __init__(self, p: BoundaryLayerProfile, x: ArrayLike, y: ArrayLike):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        if np.any(y == 0):
            raise SingularPointError("the boundary layer is singular at"
                                     " y = 0")
        self.epsilon = p.epsilon
        self.sample: StressSample = p.stress.sample(x, y)
        self.rates = decay_rates(p.tc, y)
        slopes = decay_rate_slopes(p.tc, y, self.rates)

        s = self.sample
        # (sign, lambda, dlambda/dy, A, div A, A . grad lambda)
        self.branches = []
        for (sign, lam), dlam in zip(self.rates.branches(), slopes):
            A = s.sigma + sign * 1j * s.perp
            div_A = s.div - sign * 1j * s.rot
            self.branches.append((lam, dlam, A, div_A, A[1] * dlam))

    @property
    def re_lambda(self) -> np.ndarray:
        return self.rates.lambda_plus.real

    def velocity_h(self, zeta: ArrayLike) -> np.ndarray:
        total = sum(A * np.exp(-lam * zeta) / lam
                    for lam, _, A, _, _ in self.branches)
        return (total / (2 * self.epsilon)).real

    def dzeta_velocity_h(self, zeta: ArrayLike) -> np.ndarray:
        total = sum(A * np.exp(-lam * zeta)
                    for lam, _, A, _, _ in self.branches)
        return (-total / (2 * self.epsilon)).real

    def dzeta2_velocity_h(self, zeta: ArrayLike) -> np.ndarray:
        total = sum(A * lam * np.exp(-lam * zeta)
                    for lam, _, A, _, _ in self.branches)
        return (total / (2 * self.epsilon)).real

    def div_velocity_h(self, zeta: ArrayLike) -> np.ndarray:
        total = sum((div_A / lam - A_grad * (zeta * lam + 1) / lam**2)
                    * np.exp(-lam * zeta)
                    for lam, _, _, div_A, A_grad in self.branches)
        return (total / (2 * self.epsilon)).real

    def velocity_3(self, zeta: ArrayLike) -> np.ndarray:
        total = sum((-div_A / lam**2 + A_grad * (2 + zeta * lam) / lam**3)
                    * np.exp(-lam * zeta)
                    for lam, _, _, div_A, A_grad in self.branches)
        return (total / 2).real

    def dzeta_velocity_3(self, zeta: ArrayLike) -> np.ndarray:
        return self.epsilon * self.div_velocity_h(zeta)

    def dzeta2_velocity_3(self, zeta: ArrayLike) -> np.ndarray:
        total = sum((-div_A + A_grad * zeta) * np.exp(-lam * zeta)
                    for lam, _, _, div_A, A_grad in self.branches)
        return (total / 2).real

    def pressure(self, zeta: ArrayLike) -> np.ndarray:
        return -self.epsilon**3 * self.div_velocity_h(zeta)


def bl_velocity_h(p: BoundaryLayerProfile, x: ArrayLike, y: ArrayLike,
                  zeta: ArrayLike) -> np.ndarray:
    """Horizontal layer velocity, shape (2, *broadcast(x, y, zeta))."""
    _check_zeta(zeta)
    return p.terms(x, y).velocity_h(zeta)


def bl_velocity_3(p: BoundaryLayerProfile, x: ArrayLike, y: ArrayLike,
                  zeta: ArrayLike) -> np.ndarray:
    _check_zeta(zeta)
    return p.terms(x, y).velocity_3(zeta)


def bl_pressure(p: BoundaryLayerProfile, x: ArrayLike, y: ArrayLike,
                zeta: ArrayLike) -> np.ndarray:
    """P = -eps^3 div_h U_h = -eps^2 dU_3/dzeta."""
    _check_zeta(zeta)
    return p.terms(x, y).pressure(zeta)


def _check_zeta(zeta: ArrayLike) -> None:
    if np.any(np.asarray(zeta) < 0):
        raise ValueError("zeta must be non-negative")


def ekman_pumping(stress: WindStress, tc: TruncatedCoriolis, x: ArrayLike,
                  y: ArrayLike) -> np.ndarray:
    """w = dx sigma_2 / b_delta - dy (sigma_1 / b_delta)."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    s = stress.sample(x, y)
    bd = tc.b(y)
    return s.dx[1] / bd - s.dy[0] / bd + s.sigma[0] * tc.db(y) / bd**2


def pumping_field(stress: WindStress, tc: TruncatedCoriolis,
                  grid: Grid) -> np.ndarray:
    X, Y = grid.mesh()
    return ekman_pumping(stress, tc, X, Y)


def _laguerre(re_lambda: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes zeta and weights for int_0^inf f dzeta, scaled per column so
    that exp(-2 Re(lambda) zeta) is the Laguerre weight."""
    t, w = np.polynomial.laguerre.laggauss(LAGUERRE_NODES)
    a = 2 * re_lambda[..., None]
    return t / a, w * np.exp(t) / a


@dataclass(frozen=True)
class ColumnNorms:
    """Squared L2 norms over zeta in [0, inf) of one or more columns."""
    horizontal: np.ndarray
    horizontal_quadrature: np.ndarray
    vertical: np.ndarray


def column_l2_norms(p: BoundaryLayerProfile, x: ArrayLike,
                    y: ArrayLike) -> ColumnNorms:
    """int |U_h|^2 dzeta = |sigma|^2 / (2 eps^2 |lambda|^2 Re lambda).

    Both branches have the same modulus and real part, and the cross terms
    of the two conjugate halves cancel.
    """
    t = p.terms(x, y)
    lam = t.rates.lambda_plus
    sigma_sq = np.sum(t.sample.sigma**2, axis=0)
    closed = sigma_sq / (2 * p.epsilon**2 * np.abs(lam)**2 * lam.real)

    zeta, weights = _laguerre(t.re_lambda)
    # Move the node axis last on both sides.
    tz = _LayerTerms(p, np.asarray(x, float)[..., None],
                     np.asarray(y, float)[..., None])
    uh = tz.velocity_h(zeta)
    u3 = tz.velocity_3(zeta)
    quad_h = np.sum(weights * np.sum(uh**2, axis=0), axis=-1)
    quad_3 = np.sum(weights * u3**2, axis=-1)
    return ColumnNorms(closed, quad_h, quad_3)


@dataclass(frozen=True)
class LayerNorms:
    """L2 norms over the horizontal domain times zeta in [0, inf)."""
    velocity_h: float
    velocity_3: float
    truncation: float
    grad_velocity_3: Optional[float] = None
    grad_pressure: Optional[float] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "velocity_h": self.velocity_h,
            "velocity_3": self.velocity_3,
            "truncation": self.truncation,
            "grad_velocity_3": self.grad_velocity_3,
            "grad_pressure": self.grad_pressure,
        }


def layer_norms(p: BoundaryLayerProfile, grid: Grid,
                gradients: bool = False) -> LayerNorms:
    """Norms of U_h, U_3 and (b - b_delta) U_h; with `gradients` the norms
    of grad_h U_3 and grad_h P are added (requires alpha > 3/5)."""
    X, Y = grid.mesh()
    cols = column_l2_norms(p, X, Y)
    b = p.tc.base.b(Y)
    bd = p.tc.b(Y)

    norms = dict(
        velocity_h=float(np.sqrt(grid.horizontal_integral(cols.horizontal))),
        velocity_3=float(np.sqrt(grid.horizontal_integral(cols.vertical))),
        truncation=float(np.sqrt(grid.horizontal_integral(
            (b - bd)**2 * cols.horizontal))))

    if gradients:
        p.tc.require_gradient_norms()
        # The nodes depend on y: the y derivative is taken at the nodes of
        # the centre column, from the columns one step away.
        zeta, weights = _laguerre(p.terms(X, Y).re_lambda)
        h = grid.dy
        centre, north, south = (_LayerTerms(p, X[..., None],
                                            (Y + s)[..., None])
                                for s in (0.0, h, -h))
        for name, get in (("grad_velocity_3", _LayerTerms.velocity_3),
                          ("grad_pressure", _LayerTerms.pressure)):
            gx = utilities.spectral_dx(get(centre, zeta), axis=0)
            gy = (get(north, zeta) - get(south, zeta)) / (2 * h)
            col = np.sum(weights * (gx**2 + gy**2), axis=-1)
            norms[name] = float(np.sqrt(grid.horizontal_integral(col)))

    logger.debug("layer norms at epsilon=%g: %s", p.epsilon, norms)
    return LayerNorms(**norms)


def _stretched(p: BoundaryLayerProfile, grid: Grid) -> Tuple["_LayerTerms",
                                                               np.ndarray]:
    X, Y = grid.mesh()
    zeta = (1 - grid.z) / p.epsilon
    return _LayerTerms(p, X[..., None], Y[..., None]), zeta


def sample_bl_field(p: BoundaryLayerProfile, grid: Grid) -> Field:
    """u^BL(x, y, z) = (U_h, U_3)(x, y, (1 - z) / eps) on the whole layer."""
    t, zeta = _stretched(p, grid)
    values = np.concatenate([t.velocity_h(zeta), t.velocity_3(zeta)[None]])
    return Field(grid, values, name="u_bl")


@dataclass(frozen=True)
class LayerSamples:
    """Layer quantities on the physical grid with z derivatives converted
    from zeta (d/dz = -(1/eps) d/dzeta)."""
    velocity: np.ndarray
    dzz_velocity: np.ndarray
    pressure: np.ndarray
    dz_pressure: np.ndarray


def sample_bl_layer(p: BoundaryLayerProfile, grid: Grid) -> LayerSamples:
    t, zeta = _stretched(p, grid)
    eps = p.epsilon
    velocity = np.concatenate([t.velocity_h(zeta), t.velocity_3(zeta)[None]])
    dzz = np.concatenate([t.dzeta2_velocity_h(zeta),
                          t.dzeta2_velocity_3(zeta)[None]]) / eps**2
    pressure = t.pressure(zeta)
    # P = -eps^2 dU_3/dzeta, so dP/dz = eps d^2U_3/dzeta^2.
    dz_pressure = eps * t.dzeta2_velocity_3(zeta)
    return LayerSamples(velocity, dzz, pressure, dz_pressure)
