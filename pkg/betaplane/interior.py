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

"""Geostrophic interior, bottom corrector and the assembled stationary flow.

The interior is driven by the Ekman pumping w of the surface layer:
u_3 = z w, the Sverdrup relation b' u_2 = b w, and u_1 closes the
divergence. Its pressure balances the Coriolis force exactly. The corrector
removes what the surface layer leaves at the bottom z = 0.
"""

from dataclasses import dataclass, field
import logging
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.fft
from scipy import linalg

from errors import CompatibilityError, ConsistencyError, ValidationError
import ekman
from ekman import BoundaryLayerProfile, LayerSamples
from model_core import (DeltaVerdict, Field, Grid, Parameters, Tolerances,
                        TruncatedCoriolis, WindStress,
                        enforce_delta_conditions, validate_coriolis,
                        validate_windstress)
import utilities

logger = logging.getLogger(__name__)


def sverdrup_meridional(w: np.ndarray, tc: TruncatedCoriolis,
                        grid: Grid) -> Field:
    """u_2 = b w / b' with the untruncated b."""
    y = grid.y
    db = tc.base.db(y)
    if np.any(db == 0):
        raise ValidationError("b' vanishes on the grid",
                              hypothesis="coriolis-bounds")
    return Field(grid, (tc.base.b(y) / db * w)[None], name="u2_int")


def vertical_velocity(w: np.ndarray, grid: Grid) -> Field:
    return Field(grid, (w[..., None] * grid.z)[None], name="u3_int")


def _antiderivative_x(f: np.ndarray) -> np.ndarray:
    """Periodic x antiderivative (axis 0) with zero zonal mean."""
    n = f.shape[0]
    k = utilities.wavenumbers(n, 2 * np.pi)
    inv = np.zeros(n, dtype=complex)
    nonzero = k != 0
    inv[nonzero] = 1 / (1j * k[nonzero])
    if n % 2 == 0:
        inv[n // 2] = 0
    fh = scipy.fft.fft(f, axis=0, workers=utilities.fft_workers)
    return scipy.fft.ifft(inv[:, None] * fh, axis=0,
                          workers=utilities.fft_workers).real


def zonal_velocity(w: np.ndarray, tc: TruncatedCoriolis, grid: Grid,
                   mean_tol: float = 1e-8) -> Field:
    """dx u_1 = -(2 - b b'' / b'^2) w - (b / b') dy w, gauge: zero zonal
    mean."""
    y = grid.y
    b, db, d2b = tc.base.b(y), tc.base.db(y), tc.base.d2b(y)
    dw = utilities.fd_dy(w, grid.dy, axis=1)
    rhs = -(2 - b * d2b / db**2) * w - (b / db) * dw

    mean = rhs.mean(axis=0)
    scale = max(1.0, float(np.max(np.abs(rhs))))
    worst = int(np.argmax(np.abs(mean)))
    if abs(mean[worst]) > mean_tol * scale:
        raise CompatibilityError(
            "the zonal mean of the pumping does not vanish: the stress"
            " violates the zonal compatibility condition",
            y=float(y[worst]), zonal_mean=float(mean[worst]))

    return Field(grid, _antiderivative_x(rhs)[None], name="u1_int")


def interior_pressure(u_h: Field, tc: TruncatedCoriolis,
                      integrability_tol: float = 1e-2,
                      stencil_coef: float = 8.0) -> Field:
    """Pressure with grad p = -b u_h^perp = (b u_2, -b u_1) and zero mean.

    The y stencil leaves a relative curl of order dy^2 on a true gradient,
    so the gate allows integrability_tol + stencil_coef * dy^2.
    """
    grid = u_h.grid
    y = grid.y
    b = tc.base.b(y)
    u1, u2 = u_h.values

    # curl(-b u_h^perp) = div(b u_h)
    px, py = b * u2, -b * u1
    curl = utilities.spectral_dx(py, axis=0) - utilities.fd_dy(px, grid.dy,
                                                               axis=1)
    scale = np.sqrt(grid.horizontal_integral(
        utilities.fd_dy(px, grid.dy, axis=1)**2))
    defect = np.sqrt(grid.horizontal_integral(curl**2))
    allowed = integrability_tol + stencil_coef * grid.dy**2
    if defect > allowed * max(scale, 1e-300):
        raise ConsistencyError(
            f"interior Coriolis force is not a gradient (relative defect"
            f" {defect / scale:.3g}, allowed {allowed:.3g})",
            defect=float(defect), scale=float(scale), allowed=allowed)

    p = _antiderivative_x(px)
    # Zonal mean: integrate dy p_0 = mean_x(py) from y = -L.
    mean_py = py.mean(axis=0)
    p0 = grid.dy * (np.cumsum(mean_py) - mean_py / 2)
    p = p + p0
    p -= p.mean()
    return Field(grid, p[None], name="p_int")


@dataclass(frozen=True)
class InteriorFields:
    w: np.ndarray
    u_h: np.ndarray
    p: np.ndarray
    grad_p: np.ndarray

    def u3(self, z: np.ndarray) -> np.ndarray:
        return self.w[..., None] * z


def build_interior(stress: WindStress, tc: TruncatedCoriolis, grid: Grid,
                   tolerances: Tolerances = Tolerances()) -> InteriorFields:
    w = ekman.pumping_field(stress, tc, grid)
    u2 = sverdrup_meridional(w, tc, grid)
    u1 = zonal_velocity(w, tc, grid, tolerances.pumping_mean_tol)
    u_h = Field(grid, np.concatenate([u1.values, u2.values]), name="u_int")
    p = interior_pressure(u_h, tc, tolerances.integrability_tol,
                          tolerances.integrability_stencil)
    b = tc.base.b(grid.y)
    grad_p = np.stack([b * u_h.values[1], -b * u_h.values[0]])
    return InteriorFields(w, u_h.values, p.values[0], grad_p)


@dataclass(frozen=True)
class CorrectorFields:
    """v_h = ((1-z)^2/2) Phi + grad chi and the matching v_3, with Phi the
    bottom shear of the surface layer."""
    phi_h: np.ndarray
    div_phi: np.ndarray
    phi_3: np.ndarray
    grad_chi: np.ndarray
    velocity: np.ndarray
    dzz_velocity: np.ndarray


def _solve_poisson_gradient(rhs: np.ndarray, grid: Grid) -> np.ndarray:
    """grad chi for Laplacian chi = rhs, chi = 0 beyond y = +-L.

    Modes k != 0 are tridiagonal solves in y; for k = 0 only dy chi enters
    and it is the running integral of the zonal mean."""
    nx, ny = rhs.shape
    h = grid.dy
    k = utilities.wavenumbers(nx, 2 * np.pi)
    rh = scipy.fft.fft(rhs, axis=0, workers=utilities.fft_workers)
    chi = np.zeros_like(rh)

    ab = np.empty((3, ny))
    ab[0] = 1 / h**2
    ab[2] = 1 / h**2
    for i in range(nx):
        if k[i] == 0:
            continue
        ab[1] = -2 / h**2 - k[i]**2
        chi[i] = linalg.solve_banded((1, 1), ab, rh[i])

    gx = scipy.fft.ifft(1j * k[:, None] * chi, axis=0,
                        workers=utilities.fft_workers).real
    gy = utilities.fd_dy(scipy.fft.ifft(chi, axis=0,
                                        workers=utilities.fft_workers).real,
                         h, axis=1)
    mean = rhs.mean(axis=0)
    gy += h * (np.cumsum(mean) - mean / 2)
    return np.stack([gx, gy])


def bottom_corrector(bl: BoundaryLayerProfile, grid: Grid,
                     zero_mean_tol: float = 0.05) -> CorrectorFields:
    X, Y = grid.mesh()
    terms = bl.terms(X, Y)
    eps = bl.epsilon
    zeta = 1 / eps

    phi_h = -terms.dzeta_velocity_h(zeta) / eps
    div_phi = -terms.dzeta2_velocity_3(zeta) / eps**2
    phi_3 = -terms.velocity_3(zeta)

    mean = float(phi_3.mean())
    mean_abs = float(np.abs(phi_3).mean())
    if abs(mean) > zero_mean_tol * mean_abs:
        raise ConsistencyError(
            f"bottom flux of the surface layer has mean {mean:.3g}"
            f" (mean modulus {mean_abs:.3g})", mean=mean, mean_abs=mean_abs)

    lap_chi = phi_3 - div_phi / 6
    grad_chi = _solve_poisson_gradient(lap_chi, grid)

    s = (1 - grid.z)
    v_h = phi_h[..., None] * (s**2 / 2) + grad_chi[..., None]
    v_3 = div_phi[..., None] * (s**3 / 6) + lap_chi[..., None] * s
    velocity = np.concatenate([v_h, v_3[None]])
    dzz = np.concatenate([
        np.broadcast_to(phi_h[..., None], v_h.shape),
        (div_phi[..., None] * s)[None]])
    return CorrectorFields(phi_h, div_phi, phi_3, grad_chi, velocity, dzz)


@dataclass
class StationarySolution:
    params: Parameters
    tc: TruncatedCoriolis
    stress: WindStress
    grid: Grid
    profile: BoundaryLayerProfile
    layer: LayerSamples
    interior: InteriorFields
    corrector: CorrectorFields
    delta_verdicts: List[DeltaVerdict] = field(default_factory=list)

    def interior_velocity(self) -> np.ndarray:
        nz = self.grid.nz
        u_h = np.broadcast_to(self.interior.u_h[..., None],
                              self.interior.u_h.shape + (nz,))
        return np.concatenate([u_h, self.interior.u3(self.grid.z)[None]])

    def velocity(self) -> np.ndarray:
        return (self.layer.velocity + self.interior_velocity()
                + self.corrector.velocity)

    def pressure(self) -> np.ndarray:
        """Total pressure of the stationary system; the interior part enters
        divided by epsilon."""
        return (self.interior.p[..., None] / self.params.epsilon
                + self.layer.pressure)

    def boundary_residuals(self) -> Dict[str, float]:
        """Maximum defects of the four boundary conditions, relative to the
        size of the matching forcing."""
        eps = self.params.epsilon
        X, Y = self.grid.mesh()
        t = self.profile.terms(X, Y)
        sigma = self.stress.sigma(X, Y)

        bottom_shear = (-t.dzeta_velocity_h(1 / eps) / eps
                        - self.corrector.phi_h)
        bottom_w = t.velocity_3(1 / eps) + self.corrector.velocity[2, ..., 0]
        top_shear = (-t.dzeta_velocity_h(0.0) / eps
                     - self.params.gamma * sigma)
        top_w = (t.velocity_3(0.0) + self.interior.w
                 + self.corrector.velocity[2, ..., -1])

        def rel(defect, ref):
            return float(np.max(np.abs(defect))
                         / max(1.0, float(np.max(np.abs(ref)))))

        return {
            "bottom_shear": rel(bottom_shear, self.corrector.phi_h),
            "bottom_vertical_velocity": rel(bottom_w, self.corrector.phi_3),
            "top_shear": rel(top_shear, self.params.gamma * sigma),
            "top_vertical_velocity": rel(top_w, self.interior.w),
        }

    def divergence(self, velocity: Optional[np.ndarray] = None) -> np.ndarray:
        """Discrete divergence: spectral in x, second order in y and z."""
        u = self.velocity() if velocity is None else velocity
        return (utilities.spectral_dx(u[0], axis=0)
                + utilities.fd_dy(u[1], self.grid.dy, axis=1)
                + np.gradient(u[2], self.grid.dz, axis=2, edge_order=2))

    def norms(self) -> Dict[str, float]:
        g = self.grid
        parts = {
            "layer": self.layer.velocity,
            "interior": self.interior_velocity(),
            "corrector": self.corrector.velocity,
        }
        out = {}
        for name, u in parts.items():
            out[f"{name}_h"] = Field(g, u[:2]).l2_norm()
            out[f"{name}_3"] = Field(g, u[2:]).l2_norm()
        return out

    def to_json(self) -> Dict[str, Any]:
        return {
            "parameters": self.params.to_json(),
            "grid": self.grid.to_json(),
            "norms": self.norms(),
            "boundary_residuals": self.boundary_residuals(),
            "delta_conditions": [
                {"name": v.name, "ratio": v.ratio, "passed": v.passed}
                for v in self.delta_verdicts],
        }


def assemble_stationary(params: Parameters, tc: TruncatedCoriolis,
                        stress: WindStress, grid: Grid,
                        tolerances: Tolerances = Tolerances()
                        ) -> StationarySolution:
    """u_stat = u_BL + u_int + v_int on `grid`."""
    eps = params.epsilon
    if abs(params.gamma * eps**2 - 1) > tolerances.gamma_rtol:
        raise ValidationError(
            f"the layer construction carries gamma = epsilon^-2 (got gamma ="
            f" {params.gamma:g} at epsilon = {eps:g})",
            hypothesis="gamma-scaling")

    report = validate_coriolis(tc.base, grid, tolerances.floor_ratio,
                               tolerances.slope_tol)
    report += validate_windstress(stress, grid, tolerances.near_equator,
                                  tolerances.order_tol, tolerances.compat_tol)
    report.raise_on_failure()
    verdicts = enforce_delta_conditions(params, tolerances)

    profile = BoundaryLayerProfile(stress, tc, eps)
    layer = ekman.sample_bl_layer(profile, grid)
    interior = build_interior(stress, tc, grid, tolerances)
    corrector = bottom_corrector(profile, grid, tolerances.zero_mean_tol)

    logger.info("assembled stationary solution at epsilon=%g on %dx%dx%d",
                eps, grid.nx, grid.ny, grid.nz)
    return StationarySolution(params, tc, stress, grid, profile, layer,
                              interior, corrector, verdicts)
