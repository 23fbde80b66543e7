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

"""Temperature advected by the stationary flow.

    -lam d_zz theta - kappa_h Lap_h theta + u . grad theta = 0,
    theta = theta_1 at z = 1,  d_z theta = 0 at z = 0.

The approximation theta_app = theta_bar + eps theta_BL + eps theta_lid is
built from the interior solution theta_bar (kappa_h = 0, interior
velocity), the closed-form surface layer theta_BL and an affine lid
corrector.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import math
from typing import Any, Dict, List, Sequence

import numpy as np

from errors import ConvergenceError, HypothesisError, ValidationError
from interior import InteriorFields, StationarySolution, assemble_stationary
from model_core import (ArrayLike, Grid, Parameters, Tolerances,
                        TruncatedCoriolis, WindStress, decay_rates)
import utilities

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SurfaceTemperature:
    """theta_1 = base + a exp(-(y/w)^2) (1 + mu cos(m x))."""
    base: float = 0.0
    amplitude: float = 1.0
    width: float = 1.0
    modulation: float = 0.0
    wavenumber: int = 1

    def value(self, x: ArrayLike, y: ArrayLike) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        g = np.exp(-(y / self.width)**2)
        return self.base + self.amplitude * g * (
            1 + self.modulation * np.cos(self.wavenumber * x))

    def gradient(self, x: ArrayLike, y: ArrayLike) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        g = np.exp(-(y / self.width)**2)
        m = self.wavenumber
        dx = -self.amplitude * g * self.modulation * m * np.sin(m * x)
        dy = (self.amplitude * (-2 * y / self.width**2) * g
              * (1 + self.modulation * np.cos(m * x)))
        return np.stack([dx, dy])


@dataclass
class TemperatureField:
    grid: Grid
    theta: np.ndarray
    theta1: np.ndarray
    lambda_heat: float
    iterations: int = 0
    residual: float = 0.0

    def boundary_defects(self) -> Dict[str, float]:
        dz = self.grid.dz
        t = self.theta
        bottom = (-3 * t[..., 0] + 4 * t[..., 1] - t[..., 2]) / (2 * dz)
        return {
            "top": float(np.max(np.abs(t[..., -1] - self.theta1))),
            "bottom_flux": float(np.max(np.abs(bottom))),
        }


def _thomas(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray,
            rhs: np.ndarray) -> np.ndarray:
    """Tridiagonal solve along the last axis, batched over the others."""
    n = diag.shape[-1]
    c = np.empty_like(diag)
    d = np.empty_like(rhs)
    c[..., 0] = upper[..., 0] / diag[..., 0]
    d[..., 0] = rhs[..., 0] / diag[..., 0]
    for k in range(1, n):
        m = diag[..., k] - lower[..., k] * c[..., k - 1]
        c[..., k] = upper[..., k] / m
        d[..., k] = (rhs[..., k] - lower[..., k] * d[..., k - 1]) / m

    x = np.empty_like(d)
    x[..., -1] = d[..., -1]
    for k in range(n - 2, -1, -1):
        x[..., k] = d[..., k] - c[..., k] * x[..., k + 1]
    return x


class _Stencil:
    """Upwind advection, second order diffusion; unknowns are the layers
    k = 0 .. nz-2, the top layer holds theta_1."""

    def __init__(self, velocity: np.ndarray, lam: float, kappa_h: float,
                 grid: Grid):
        dx, dy, dz = grid.dx, grid.dy, grid.dz
        u1, u2, u3 = (velocity[i][..., :-1] for i in range(3))

        self.xm = np.maximum(u1, 0) / dx + kappa_h / dx**2
        self.xp = -np.minimum(u1, 0) / dx + kappa_h / dx**2
        self.ym = np.maximum(u2, 0) / dy + kappa_h / dy**2
        self.yp = -np.minimum(u2, 0) / dy + kappa_h / dy**2

        self.diag = (2 * lam / dz**2 + np.abs(u3) / dz + self.xm + self.xp
                     + self.ym + self.yp)
        self.lower = -lam / dz**2 - np.maximum(u3, 0) / dz
        self.upper = -lam / dz**2 + np.minimum(u3, 0) / dz
        # Bottom ghost layer mirrors layer 1 (d_z theta = 0).
        self.upper[..., 0] += self.lower[..., 0]
        self.lower[..., 0] = 0

        ny = grid.ny
        self.jm = np.r_[0, np.arange(ny - 1)]
        self.jp = np.r_[np.arange(1, ny), ny - 1]

    def horizontal(self, theta: np.ndarray, rows=slice(None)) -> np.ndarray:
        t = theta[..., :-1]
        nx = t.shape[0]
        i = np.arange(nx)[rows]
        return (self.xm[rows] * t[(i - 1) % nx]
                + self.xp[rows] * t[(i + 1) % nx]
                + self.ym[rows] * t[i][:, self.jm]
                + self.yp[rows] * t[i][:, self.jp])

    def residual(self, theta: np.ndarray) -> float:
        """Jacobi-scaled max residual."""
        t = theta[..., :-1]
        above = theta[..., 1:]
        below = np.concatenate([t[..., :1], t[..., :-1]], axis=-1)
        r = (self.diag * t + self.lower * below + self.upper * above
             - self.horizontal(theta))
        return float(np.max(np.abs(r / self.diag)))


def solve_temperature(velocity: np.ndarray, theta1: np.ndarray, lam: float,
                      grid: Grid, kappa_h: float = 0.0, tol: float = 1e-8,
                      max_iter: int = 500,
                      damping: float = 1.0) -> TemperatureField:
    """Gauss-Seidel over x slices (even slices, then odd), each slice solved
    with one batched tridiagonal elimination per vertical column."""
    if not 0 < damping <= 1:
        raise ValidationError("damping must lie in (0, 1]")

    st = _Stencil(velocity, lam, kappa_h, grid)
    theta = np.repeat(theta1[..., None], grid.nz, axis=-1).astype(float)
    scale = max(1.0, float(np.max(np.abs(theta1))))

    it, res = 0, math.inf
    with utilities.CallEvery(30, lambda: logger.info(
            "temperature sweep %d: residual %.3e", it, res)):
        for it in range(1, max_iter + 1):
            for parity in (0, 1):
                rows = slice(parity, None, 2)
                rhs = st.horizontal(theta, rows)
                rhs[..., -1] -= st.upper[rows][..., -1] * theta1[rows]
                upper = st.upper[rows].copy()
                upper[..., -1] = 0
                new = _thomas(st.lower[rows], st.diag[rows], upper, rhs)
                old = theta[rows, :, :-1]
                theta[rows, :, :-1] = (1 - damping) * old + damping * new

            res = st.residual(theta)
            logger.debug("temperature sweep %d: residual %.3e", it, res)
            if res < tol * scale:
                return TemperatureField(grid, theta, theta1, lam, it, res)

    raise ConvergenceError(f"temperature solver did not converge in"
                           f" {max_iter} sweeps (residual {res:.3g})",
                           residual=res, iterations=max_iter)


def advection_bound(interior: InteriorFields, grid: Grid) -> float:
    """max over the grid of the Frobenius norm of grad_h u_h."""
    u = interior.u_h
    gx = utilities.spectral_dx(u, axis=1)
    gy = utilities.fd_dy(u, grid.dy, axis=2)
    return float(np.max(np.sqrt(np.sum(gx**2 + gy**2, axis=0))))


def solve_interior_temperature(interior: InteriorFields, theta1: np.ndarray,
                               lam: float, grid: Grid, tol: float = 1e-8,
                               max_iter: int = 500,
                               damping: float = 1.0) -> TemperatureField:
    bound = advection_bound(interior, grid)
    if bound > lam / 4:
        raise HypothesisError(
            f"interior velocity gradient {bound:.3g} exceeds lambda/4 ="
            f" {lam / 4:.3g}", hypothesis="advection-bound", bound=bound,
            lambda_heat=lam)
    nz = grid.nz
    velocity = np.concatenate([
        np.broadcast_to(interior.u_h[..., None], interior.u_h.shape + (nz,)),
        interior.u3(grid.z)[None]])
    return solve_temperature(velocity, theta1, lam, grid, 0.0, tol, max_iter,
                             damping)


def _bl_terms(stress: WindStress, tc: TruncatedCoriolis,
              theta1: SurfaceTemperature, x: ArrayLike, y: ArrayLike):
    s = stress.sample(x, y)
    grad = theta1.gradient(x, y)
    rates = decay_rates(tc, np.broadcast_to(y, s.sigma.shape[1:]))
    for sign, lam in rates.branches():
        A = s.sigma + sign * 1j * s.perp
        yield lam, np.sum(A * grad, axis=0)


def bl_temperature(stress: WindStress, tc: TruncatedCoriolis,
                   theta1: SurfaceTemperature, lam: float, x: ArrayLike,
                   y: ArrayLike, zeta: ArrayLike, order: int = 0
                   ) -> np.ndarray:
    """theta_BL = (1/(2 lam)) grad theta_1 . sum_pm A^pm
    exp(-lambda^pm zeta) / (lambda^pm)^3, or its `order`-th zeta
    derivative."""
    total = sum(a * (-rate)**order * np.exp(-rate * zeta) / rate**3
                for rate, a in _bl_terms(stress, tc, theta1, x, y))
    return (total / (2 * lam)).real


def lid_corrector(bl_bottom_slope: np.ndarray, bl_top: np.ndarray,
                  epsilon: float, z: ArrayLike) -> np.ndarray:
    """theta_lid = (z - 1) (1/eps) d_zeta theta_BL(1/eps) - theta_BL(0)."""
    z = np.asarray(z, float)
    return ((z - 1) * bl_bottom_slope[..., None] / epsilon
            - bl_top[..., None])


def assemble_approximation(theta_bar: TemperatureField, stress: WindStress,
                           tc: TruncatedCoriolis,
                           theta1: SurfaceTemperature,
                           epsilon: float) -> np.ndarray:
    grid = theta_bar.grid
    lam = theta_bar.lambda_heat
    X, Y = grid.mesh()
    x, y = X[..., None], Y[..., None]
    zeta = (1 - grid.z) / epsilon

    layer = bl_temperature(stress, tc, theta1, lam, x, y, zeta)
    slope = bl_temperature(stress, tc, theta1, lam, X, Y, 1 / epsilon, 1)
    top = bl_temperature(stress, tc, theta1, lam, X, Y, 0.0)
    lid = lid_corrector(slope, top, epsilon, grid.z)
    return theta_bar.theta + epsilon * layer + epsilon * lid


def energy_identity(theta_bar: TemperatureField, interior: InteriorFields,
                    theta1: SurfaceTemperature) -> Dict[str, float]:
    """lam int |d_z theta|^2 against 1/2 int w theta_1^2
    - int theta u_h . grad theta_1; equal up to discretization error."""
    grid = theta_bar.grid
    X, Y = grid.mesh()
    t = theta_bar.theta
    dz_t = np.gradient(t, grid.dz, axis=-1, edge_order=2)
    lhs = theta_bar.lambda_heat * grid.volume_integral(dz_t**2)

    th1 = theta1.value(X, Y)
    flux = np.sum(interior.u_h * theta1.gradient(X, Y), axis=0)
    rhs = (0.5 * grid.horizontal_integral(interior.w * th1**2)
           - grid.volume_integral(t * flux[..., None]))
    return {"lhs": float(lhs), "rhs": float(rhs)}


@dataclass
class ThermoclineRun:
    epsilon: float
    nz: int
    iterations: int
    error_l2: float
    error_dz_l2: float
    boundary: Dict[str, float]
    energy: Dict[str, float]
    grid: Grid = field(repr=False)
    theta: np.ndarray = field(repr=False)
    theta_app: np.ndarray = field(repr=False)

    def to_json(self) -> Dict[str, Any]:
        return {"epsilon": self.epsilon, "nz": self.nz,
                "iterations": self.iterations, "error_l2": self.error_l2,
                "error_dz_l2": self.error_dz_l2, "boundary": self.boundary,
                "energy_identity": self.energy}


@dataclass
class ConvergenceStudy:
    runs: List[ThermoclineRun]

    @property
    def passed(self) -> bool:
        return (utilities.strictly_decreasing(r.error_l2 for r in self.runs)
                and utilities.strictly_decreasing(r.error_dz_l2
                                                  for r in self.runs))

    def to_json(self) -> Dict[str, Any]:
        return {"runs": [r.to_json() for r in self.runs],
                "passed": self.passed}


def thermocline_run(params: Parameters, tc: TruncatedCoriolis,
                    stress: WindStress, theta1: SurfaceTemperature,
                    grid: Grid, tolerances: Tolerances = Tolerances(),
                    tol: float = 1e-8, max_iter: int = 500,
                    damping: float = 1.0) -> ThermoclineRun:
    """Full solve against the assembled approximation at one epsilon."""
    eps, lam = params.epsilon, params.lambda_heat
    sol: StationarySolution = assemble_stationary(params, tc, stress, grid,
                                                  tolerances)
    X, Y = grid.mesh()
    th1 = theta1.value(X, Y)

    theta_bar = solve_interior_temperature(sol.interior, th1, lam, grid, tol,
                                           max_iter, damping)
    theta_app = assemble_approximation(theta_bar, stress, tc, theta1, eps)
    full = solve_temperature(sol.velocity(), th1, lam, grid,
                             eps**2 * lam, tol, max_iter, damping)

    diff = full.theta - theta_app
    dz_diff = np.gradient(diff, grid.dz, axis=-1, edge_order=2)
    run = ThermoclineRun(
        epsilon=eps, nz=grid.nz, iterations=full.iterations,
        error_l2=float(np.sqrt(grid.volume_integral(diff**2))),
        error_dz_l2=float(np.sqrt(grid.volume_integral(dz_diff**2))),
        boundary=full.boundary_defects(),
        energy=energy_identity(theta_bar, sol.interior, theta1),
        grid=grid, theta=full.theta, theta_app=theta_app)
    logger.info("thermocline epsilon=%g: |theta - theta_app| = %.3e,"
                " |d_z(theta - theta_app)| = %.3e", eps, run.error_l2,
                run.error_dz_l2)
    return run


def convergence_study(epsilons: Sequence[float], template: Parameters,
                      coriolis_factory, stress: WindStress,
                      theta1: SurfaceTemperature, grid: Grid,
                      points_per_layer: int = 10,
                      tolerances: Tolerances = Tolerances(),
                      tol: float = 1e-8, max_iter: int = 500,
                      damping: float = 1.0,
                      threads: int = 1) -> ConvergenceStudy:
    """`coriolis_factory(delta, alpha)` as in the residual study."""
    epsilons = [float(e) for e in epsilons]
    if len(epsilons) < 3 or not utilities.strictly_decreasing(epsilons):
        raise ValidationError("a convergence study needs at least 3 strictly"
                              " decreasing epsilons", hypothesis="study")

    def run(eps: float) -> ThermoclineRun:
        params = Parameters.theorem_scaling(
            eps, nu_h=template.nu_h, alpha=template.alpha,
            beta=template.beta, lambda_heat=template.lambda_heat)
        g = grid.with_nz(max(grid.nz,
                             math.ceil(points_per_layer / eps) + 1))
        tc = coriolis_factory(params.delta, params.alpha)
        return thermocline_run(params, tc, stress, theta1, g, tolerances, tol,
                               max_iter, damping)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        runs = list(pool.map(run, epsilons))

    study = ConvergenceStudy(runs)
    if not study.passed:
        logger.warning("thermocline errors are not decreasing in epsilon")
    return study
