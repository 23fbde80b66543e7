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

"""Rays of z-oscillating (Poincare) waves.

A wave with vertical wavenumber k3 travels along the bicharacteristics of
the symbol h = mode |k3 beta y| / sqrt(k3^2 + xi^2). h is conserved, so a
ray started at xi = 0 follows the hyperbola
beta^2 k3^2 Y^2 = h0^2 (k3^2 + Xi^2) and leaves every bounded latitude band.
Horizontal viscosity damps the carried energy by exp(-4 nu_h / eps^2
int Xi^2).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import enum
import logging
import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from errors import (DegenerateRayError, IntegrationError, SingularPointError,
                    ValidationError)
import utilities

logger = logging.getLogger(__name__)


class Mode(enum.IntEnum):
    PLUS = 1
    MINUS = -1


class Regime(enum.Enum):
    PROPAGATIVE = "propagative"
    DISSIPATIVE = "dissipative"
    MIXED = "mixed"


def _check_k3(k3: int) -> None:
    if k3 == 0:
        raise ValidationError("vertical wavenumber k3 must be nonzero",
                              hypothesis="nonzero-k3")


def hamiltonian(mode: int, y, xi, k3: int, beta: float = 1.0):
    _check_k3(k3)
    return mode * np.abs(k3 * beta * np.asarray(y)) / np.sqrt(
        k3**2 + np.asarray(xi)**2)


def dispersion_poly(y, xi, tau, k3: int, beta: float = 1.0):
    y, xi, tau = (np.asarray(a) for a in (y, xi, tau))
    return k3**2 * (beta * y)**2 - (k3**2 + xi**2) * tau**2


@dataclass(frozen=True)
class RayState:
    Y: float
    Xi: float
    mode: Mode
    k3: int
    k: int = 0
    beta: float = 1.0
    h0: float = 0.0
    damping_integral: float = 0.0

    @classmethod
    def launch(cls, y0: float, mode: int, k3: int, beta: float = 1.0,
               xi0: float = 0.0, k: int = 0) -> "RayState":
        _check_k3(k3)
        h0 = float(hamiltonian(mode, y0, xi0, k3, beta))
        if h0 == 0:
            raise DegenerateRayError(
                f"ray launched at y = {y0} has h0 = 0 and never leaves the"
                " equator", y0=y0, mode=int(mode), k3=k3)
        return cls(float(y0), float(xi0), Mode(mode), k3, k, beta, h0)

    def h(self) -> float:
        return float(hamiltonian(self.mode, self.Y, self.Xi, self.k3,
                                 self.beta))


def _rhs(Y: float, Xi: float, mode: int, k3: int,
         beta: float) -> Tuple[float, float, float]:
    q = k3 * k3 + Xi * Xi
    root = math.sqrt(q)
    dY = -mode * abs(k3 * beta * Y) * Xi / (q * root)
    dXi = -mode * beta * abs(k3) * math.copysign(1.0, Y) / root
    return dY, dXi, Xi * Xi


def ray_rhs(state: RayState) -> Tuple[float, float]:
    """(dY/dt, dXi/dt) = (dh/dxi, -dh/dy)."""
    if state.Y == 0:
        if state.h0 == 0:
            raise DegenerateRayError("ray sits on the equator with h0 = 0")
        raise SingularPointError("the symbol is not differentiable at y = 0")
    dY, dXi, _ = _rhs(state.Y, state.Xi, state.mode, state.k3, state.beta)
    return dY, dXi


def _rk4_step(Y: float, Xi: float, mode: int, k3: int, beta: float,
              dt: float) -> Tuple[float, float, float]:
    """Classical RK4 for (Y, Xi, int Xi^2)."""
    a1, b1, c1 = _rhs(Y, Xi, mode, k3, beta)
    a2, b2, c2 = _rhs(Y + 0.5 * dt * a1, Xi + 0.5 * dt * b1, mode, k3, beta)
    a3, b3, c3 = _rhs(Y + 0.5 * dt * a2, Xi + 0.5 * dt * b2, mode, k3, beta)
    a4, b4, c4 = _rhs(Y + dt * a3, Xi + dt * b3, mode, k3, beta)
    return (dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4),
            dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4),
            abs(dt) / 6 * (c1 + 2 * c2 + 2 * c3 + c4))


@dataclass
class RayTrajectory:
    start: RayState
    times: np.ndarray
    Y: np.ndarray
    Xi: np.ndarray
    damping_integral: np.ndarray
    reverse: bool = False

    @property
    def end(self) -> RayState:
        return replace(self.start, Y=float(self.Y[-1]), Xi=float(self.Xi[-1]),
                       damping_integral=float(self.damping_integral[-1]))

    def h(self) -> np.ndarray:
        s = self.start
        return hamiltonian(s.mode, self.Y, self.Xi, s.k3, s.beta)

    def max_drift(self) -> float:
        return float(np.max(np.abs(self.h() - self.start.h0))
                     / abs(self.start.h0))

    def level_line_defect(self) -> float:
        """max | |Y| - |h0| sqrt(k3^2 + Xi^2) / (beta |k3|) | relative."""
        s = self.start
        expected = abs(s.h0) * np.sqrt(s.k3**2 + self.Xi**2) / (
            s.beta * abs(s.k3))
        return float(np.max(np.abs(np.abs(self.Y) - expected) / expected))


def integrate_ray(state0: RayState, t_end: float, dt: float,
                  drift_tol: float = 1e-8, sample_every: int = 1,
                  reverse: bool = False) -> RayTrajectory:
    """Integrate a ray over [0, t_end] (backwards in time if `reverse`)
    with fixed-step RK4, checking the conservation of h at every step."""
    if dt <= 0 or t_end <= 0:
        raise ValidationError("dt and t_end must be positive")
    if state0.h0 == 0:
        raise DegenerateRayError("cannot integrate a ray with h0 = 0")

    n = int(round(t_end / dt))
    step = -dt if reverse else dt
    mode, k3, beta, h0 = int(state0.mode), state0.k3, state0.beta, state0.h0
    Y, Xi, I = state0.Y, state0.Xi, state0.damping_integral

    times, ys, xis, integrals = [0.0], [Y], [Xi], [I]
    for i in range(1, n + 1):
        dY, dXi, dI = _rk4_step(Y, Xi, mode, k3, beta, step)
        Y, Xi, I = Y + dY, Xi + dXi, I + dI

        h = mode * abs(k3 * beta * Y) / math.sqrt(k3 * k3 + Xi * Xi)
        drift = abs(h - h0) / abs(h0)
        if drift > drift_tol or not math.isfinite(drift):
            raise IntegrationError(
                f"Hamiltonian drift {drift:.3g} exceeds {drift_tol:g} at"
                f" t = {i * dt:g}", t=i * dt, drift=drift, Y=Y, Xi=Xi, dt=dt)

        if i % sample_every == 0 or i == n:
            times.append(i * dt)
            ys.append(Y)
            xis.append(Xi)
            integrals.append(I)

    logger.debug("ray y0=%g mode=%+d: %d steps, end (Y, Xi) = (%g, %g)",
                 state0.Y, mode, n, Y, Xi)
    return RayTrajectory(state0, np.array(times), np.array(ys),
                         np.array(xis), np.array(integrals), reverse)


@dataclass
class EscapeReport:
    exit_time: Optional[float]
    escaped: bool
    xi_exponent: Optional[utilities.SlopeFit]
    xi_prefactor: Optional[float]
    expected_prefactor: float
    level_floor_holds: bool
    y_growing: bool
    linear_bound_holds: bool

    def to_json(self) -> Dict[str, Any]:
        return {
            "exit_time": self.exit_time,
            "escaped": self.escaped,
            "xi_exponent": self.xi_exponent,
            "xi_prefactor": self.xi_prefactor,
            "expected_prefactor": self.expected_prefactor,
            "level_floor_holds": self.level_floor_holds,
            "y_growing": self.y_growing,
            "linear_bound_holds": self.linear_bound_holds,
        }


def escape_diagnostics(traj: RayTrajectory, band: Tuple[float, float],
                       fit_from: Optional[float] = None) -> EscapeReport:
    """Exit time from the latitude band and the late-time law of |Xi|.

    |Xi| is fitted against t over [fit_from, t_end] (default: the last
    decade); dXi/dt ~ -beta k3 / Xi gives |Xi| ~ sqrt(2 beta |k3| t).
    """
    s = traj.start
    t = traj.times
    outside = (traj.Y < band[0]) | (traj.Y > band[1])
    exit_time = float(t[np.argmax(outside)]) if outside.any() else None

    t_end = float(t[-1])
    start = t_end / 10 if fit_from is None else fit_from
    late = (t >= start) & (t > 0) & (np.abs(traj.Xi) > 0)
    fit, prefactor = None, None
    if np.count_nonzero(late) >= 3:
        fit = utilities.fit_power_law(t[late], np.abs(traj.Xi[late]))
        prefactor = float(np.mean(np.abs(traj.Xi[late]) / np.sqrt(t[late])))

    floor = abs(s.h0) / s.beta
    level_floor = bool(np.all(np.abs(traj.Y) >= floor * (1 - 1e-12)))
    idx = np.searchsorted(t, t_end / 10)
    y_growing = bool(abs(traj.Y[-1]) > abs(traj.Y[min(idx, len(t) - 1)]))
    linear = bool(np.all(np.abs(traj.Xi - s.Xi) >= s.beta * t - 1e-12))

    return EscapeReport(exit_time, exit_time is not None, fit, prefactor,
                        math.sqrt(2 * s.beta * abs(s.k3)), level_floor,
                        y_growing, linear)


def damping_weight(traj: RayTrajectory, nu_h: float,
                   epsilon: float) -> np.ndarray:
    """exp(-4 nu_h / eps^2 int_0^t Xi^2 ds) along the ray."""
    if nu_h < 0:
        raise ValidationError("nu_h must be non-negative")
    I = traj.damping_integral - traj.start.damping_integral
    return np.exp(-4 * nu_h / epsilon**2 * I)


def endpoint_damping_weight(traj: RayTrajectory, nu_h: float,
                            epsilon: float) -> np.ndarray:
    """Comparison form with the endpoint value Xi(t)^2 t in the exponent."""
    return np.exp(-4 * nu_h / epsilon**2 * traj.Xi**2 * traj.times)


def regime(nu_h: float, epsilon: float, margin: float = 0.1) -> Regime:
    ratio = nu_h / epsilon**2
    if ratio <= margin:
        return Regime.PROPAGATIVE
    if ratio >= 1 / margin:
        return Regime.DISSIPATIVE
    return Regime.MIXED


def _polarization_factor(y: np.ndarray, k3: int, xi) -> np.ndarray:
    _check_k3(k3)
    y = np.asarray(y, dtype=float)
    return abs(k3) * np.sign(y) / np.sqrt(k3**2 + np.asarray(xi)**2)


def polarization_leading(u1: np.ndarray, u2: np.ndarray, y: np.ndarray,
                         k3: int, xi=0.0) -> Tuple[np.ndarray, np.ndarray]:
    """mu^pm = (u2 +- i c u1) / 2 with c = |k3| sign(y) / sqrt(k3^2 + xi^2).

    u = mu^+ (-i/c, 1) + mu^- (i/c, 1)."""
    u1, u2, y = np.broadcast_arrays(np.asarray(u1), np.asarray(u2),
                                    np.asarray(y, dtype=float))
    touching = (y == 0) & ((u1 != 0) | (u2 != 0))
    if touching.any():
        raise SingularPointError("initial data must vanish at y = 0 to be"
                                 " split into Poincare modes")
    c = _polarization_factor(np.where(y == 0, 1.0, y), k3, xi)
    return (u2 + 1j * c * u1) / 2, (u2 - 1j * c * u1) / 2


def reconstruct_polarization(mu_plus: np.ndarray, mu_minus: np.ndarray,
                             y: np.ndarray, k3: int,
                             xi=0.0) -> Tuple[np.ndarray, np.ndarray]:
    c = _polarization_factor(y, k3, xi)
    return -1j * (mu_plus - mu_minus) / c, mu_plus + mu_minus


@dataclass
class RayEnsemble:
    rays: List[RayTrajectory]
    weights: np.ndarray
    band: Tuple[float, float]
    nu_h: float
    epsilon: float
    times: np.ndarray = field(init=False)
    energy_in_band: np.ndarray = field(init=False)
    damped_energy_in_band: np.ndarray = field(init=False)

    def __post_init__(self):
        self.times = self.rays[0].times
        inside = np.array([(r.Y >= self.band[0]) & (r.Y <= self.band[1])
                           for r in self.rays])
        damping = np.array([damping_weight(r, self.nu_h, self.epsilon)
                            for r in self.rays])
        w = self.weights[:, None]
        self.energy_in_band = np.sum(w * inside, axis=0)
        self.damped_energy_in_band = np.sum(w * inside * damping, axis=0)

    def to_json(self) -> Dict[str, Any]:
        return {
            "rays": len(self.rays),
            "total_weight": float(self.weights.sum()),
            "times": self.times,
            "energy_in_band": self.energy_in_band,
            "damped_energy_in_band": self.damped_energy_in_band,
            "regime": regime(self.nu_h, self.epsilon).value,
        }


def launch_ensemble(u1: np.ndarray, u2: np.ndarray, y: np.ndarray, k3: int,
                    t_end: float, dt: float, nu_h: float, epsilon: float,
                    band: Tuple[float, float], beta: float = 1.0,
                    drift_tol: float = 1e-8, sample_every: int = 1,
                    threads: int = 1) -> RayEnsemble:
    """One ray per latitude sample and mode, weighted by |mu^pm|^2."""
    mu_p, mu_m = polarization_leading(u1, u2, y, k3)
    launches = []
    for mode, mu in ((Mode.PLUS, mu_p), (Mode.MINUS, mu_m)):
        for yj, m in zip(np.asarray(y, float), np.abs(mu)**2):
            if m > 0:
                launches.append((RayState.launch(yj, mode, k3, beta), m))
    if not launches:
        raise ValidationError("the initial data carry no Poincare energy")

    def run(item):
        return integrate_ray(item[0], t_end, dt, drift_tol, sample_every)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rays = list(pool.map(run, launches))

    logger.info("ray ensemble: %d rays to t=%g", len(rays), t_end)
    return RayEnsemble(rays, np.array([m for _, m in launches]), band, nu_h,
                       epsilon)
