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

"""Residual of the stationary system and epsilon scaling studies.

The stationary operator is

    (1/eps) b u_h^perp + grad_h p - eps d_zz u_h - nu_h Lap_h u_h
    (1/eps^2) d_z p - eps d_zz u_3 - nu_h Lap_h u_3

and its value on an assembled solution is split into named terms so that
their sizes can be followed as epsilon goes to zero.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import math
from typing import Any, Callable, Dict, List, Sequence

import numpy as np
import scipy.fft
from scipy import integrate

from errors import ValidationError
from interior import StationarySolution, assemble_stationary
from model_core import (Field, Grid, Parameters, Tolerances,
                        TruncatedCoriolis, WindStress,
                        check_delta_conditions, coriolis_profile,
                        truncate_coriolis)
import utilities
from utilities import SlopeFit

logger = logging.getLogger(__name__)

# Re-exported: the delta conditions are part of the residual analysis.
__all__ = ["check_delta_conditions", "apply_stationary_operator",
           "dual_norm", "measure_residual", "scaling_study"]

HORIZONTAL_TERMS = ("truncation_mismatch", "layer_pressure", "geostrophic",
                    "corrector_rotation", "horizontal_viscosity")
VERTICAL_TERMS = ("layer_balance", "corrector_vertical",
                  "vertical_viscosity")
GROUPS = {
    "r_h1": ("truncation_mismatch", "layer_pressure", "geostrophic",
             "corrector_rotation"),
    "r_h2": ("horizontal_viscosity",),
    "r_31": ("layer_balance", "corrector_vertical"),
    "r_32": ("vertical_viscosity",),
}


def _perp(u: np.ndarray) -> np.ndarray:
    return np.stack([-u[1], u[0]])


def _grad_h(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Horizontal gradient of an (nx, ny, ...) array."""
    return np.stack([utilities.spectral_dx(f, axis=0),
                     utilities.fd_dy(f, grid.dy, axis=1)])


def _laplacian_h(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Horizontal Laplacian of a (C, nx, ny, ...) array."""
    return (utilities.spectral_dx(f, axis=1, order=2)
            + utilities.fd_dyy(f, grid.dy, axis=2))


@dataclass
class ResidualField:
    """Residual of both equations, term by term.

    Horizontal terms have shape (2, nx, ny, nz), vertical ones (1, nx, ny,
    nz)."""
    grid: Grid
    terms: Dict[str, np.ndarray]

    @property
    def horizontal(self) -> np.ndarray:
        return sum(self.terms[t] for t in HORIZONTAL_TERMS)

    @property
    def vertical(self) -> np.ndarray:
        return sum(self.terms[t] for t in VERTICAL_TERMS)

    def group(self, name: str) -> np.ndarray:
        return sum(self.terms[t] for t in GROUPS[name])


def apply_stationary_operator(sol: StationarySolution) -> ResidualField:
    eps = sol.params.epsilon
    nu_h = sol.params.nu_h
    grid = sol.grid
    b_h = sol.tc.base.b(grid.y)
    b = b_h[:, None]

    layer = sol.layer
    corr = sol.corrector
    u = sol.velocity()

    terms = {
        "truncation_mismatch": (b * _perp(layer.velocity[:2]) / eps
                                - eps * layer.dzz_velocity[:2]),
        "layer_pressure": _grad_h(layer.pressure, grid),
        "geostrophic": ((b_h * _perp(sol.interior.u_h)
                         + sol.interior.grad_p) / eps)[..., None]
                       * np.ones(grid.nz),
        "corrector_rotation": (b * _perp(corr.velocity[:2]) / eps
                               - eps * corr.dzz_velocity[:2]),
        "horizontal_viscosity": -nu_h * _laplacian_h(u[:2], grid),
        "layer_balance": (layer.dz_pressure / eps**2
                          - eps * layer.dzz_velocity[2])[None],
        "corrector_vertical": -eps * corr.dzz_velocity[2:],
        "vertical_viscosity": -nu_h * _laplacian_h(u[2:], grid),
    }
    return ResidualField(grid, terms)


def dual_norm(f: Field, wrap_tol: float = 1e-10) -> float:
    """Norm in L2(0, 1; H^-1) of the horizontal variables.

    y is extended periodically from [-L, L]; a warning is logged when the
    field does not vanish at y = +-L.
    """
    grid = f.grid
    v = f.values
    edge = max(float(np.max(np.abs(v[:, :, 0]))),
               float(np.max(np.abs(v[:, :, -1]))))
    peak = float(np.max(np.abs(v)))
    if edge > wrap_tol * max(peak, 1e-300) and edge > 0:
        logger.warning("H^-1 norm of '%s': boundary values %.3g of peak"
                       " %.3g wrap around in y", f.name, edge, peak)

    k = utilities.wavenumbers(grid.nx, 2 * np.pi)
    xi = utilities.wavenumbers(grid.ny, 2 * grid.half_width)
    weight = 1 / (1 + k[:, None]**2 + xi[None, :]**2)
    if f.is_volume:
        weight = weight[..., None]

    fh = scipy.fft.fft2(v, axes=(1, 2), workers=utilities.fft_workers)
    density = np.sum(weight * np.abs(fh)**2, axis=(0, 1, 2))
    density *= grid.dx * grid.dy / (grid.nx * grid.ny)
    if f.is_volume:
        return float(np.sqrt(integrate.trapezoid(density, dx=grid.dz)))
    return float(np.sqrt(density))


@dataclass
class TermNorm:
    l2: float
    h_minus_1: float

    def to_json(self, nu_h: float) -> Dict[str, Any]:
        out = {"l2": self.l2, "h_minus_1": self.h_minus_1}
        if nu_h > 0:
            out["l2_over_sqrt_nu_h"] = self.l2 / math.sqrt(nu_h)
            out["h_minus_1_over_sqrt_nu_h"] = self.h_minus_1 / math.sqrt(nu_h)
            out["l2_over_nu_h"] = self.l2 / nu_h
        return out


@dataclass
class ResidualReport:
    epsilon: float
    nu_h: float
    delta: float
    terms: Dict[str, TermNorm]
    groups: Dict[str, TermNorm]
    sizes: Dict[str, float] = field(default_factory=dict)

    @property
    def r_h1(self) -> float:
        return self.groups["r_h1"].l2

    @property
    def r_h2(self) -> float:
        return self.groups["r_h2"].h_minus_1

    @property
    def r_31(self) -> float:
        return self.groups["r_31"].l2

    @property
    def r_32(self) -> float:
        return self.groups["r_32"].h_minus_1

    def to_json(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "nu_h": self.nu_h,
            "delta": self.delta,
            "terms": {k: v.to_json(self.nu_h) for k, v in self.terms.items()},
            "groups": {k: v.to_json(self.nu_h)
                       for k, v in self.groups.items()},
            "sizes": self.sizes,
        }


def measure_residual(sol: StationarySolution,
                     tolerances: Tolerances = Tolerances()) -> ResidualReport:
    res = apply_stationary_operator(sol)
    grid = sol.grid

    def norm(name: str, values: np.ndarray) -> TermNorm:
        f = Field(grid, values, name=name)
        return TermNorm(f.l2_norm(), dual_norm(f, tolerances.wrap_tol))

    terms = {name: norm(name, v) for name, v in res.terms.items()}
    groups = {name: norm(name, res.group(name)) for name in GROUPS}

    sizes = sol.norms()
    sizes["interior"] = math.hypot(sizes["interior_h"], sizes["interior_3"])
    report = ResidualReport(sol.params.epsilon, sol.params.nu_h,
                            sol.params.delta, terms, groups, sizes)
    logger.info("epsilon=%g: r_h1=%.3e r_h2=%.3e r_31=%.3e r_32=%.3e",
                report.epsilon, report.r_h1, report.r_h2, report.r_31,
                report.r_32)
    return report


@dataclass(frozen=True)
class PowerRule:
    """value = factor * epsilon^exponent."""
    factor: float = 1.0
    exponent: float = 1.0

    def __call__(self, epsilon: float) -> float:
        return self.factor * epsilon**self.exponent

    def to_json(self) -> Dict[str, float]:
        return {"factor": self.factor, "exponent": self.exponent}


@dataclass
class ScalingStudy:
    epsilons: List[float]
    delta_rule: PowerRule
    nu_h_rule: PowerRule
    reports: List[ResidualReport]
    slopes: Dict[str, SlopeFit]
    checks: Dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def rows(self) -> List[Dict[str, float]]:
        out = []
        for r in self.reports:
            row = {"epsilon": r.epsilon, "delta": r.delta, "nu_h": r.nu_h,
                   "r_h1": r.r_h1, "r_h2": r.r_h2, "r_31": r.r_31,
                   "r_32": r.r_32,
                   "layer_h": r.sizes["layer_h"],
                   "interior": r.sizes["interior"]}
            out.append(row)
        return out

    def to_json(self) -> Dict[str, Any]:
        return {
            "epsilons": self.epsilons,
            "delta_rule": self.delta_rule.to_json(),
            "nu_h_rule": self.nu_h_rule.to_json(),
            "reports": [r.to_json() for r in self.reports],
            "slopes": {k: v.to_json() for k, v in self.slopes.items()},
            "checks": self.checks,
            "passed": self.passed,
        }


def study_grid(grid: Grid, epsilon: float, points_per_layer: int) -> Grid:
    """Refine z so that the surface layer of width epsilon is resolved."""
    return grid.with_nz(max(grid.nz, math.ceil(points_per_layer / epsilon)
                            + 1))


def scaling_study(template: Parameters, epsilons: Sequence[float],
                  coriolis_factory: Callable[[float, float],
                                             TruncatedCoriolis],
                  stress: WindStress, grid: Grid,
                  delta_rule: PowerRule = PowerRule(),
                  nu_h_rule: PowerRule = PowerRule(1.0, 3.0),
                  points_per_layer: int = 20,
                  tolerances: Tolerances = Tolerances(),
                  threads: int = 1) -> ScalingStudy:
    """Assemble and measure the stationary solution along an epsilon ladder.

    `coriolis_factory(delta, alpha)` builds the truncated Coriolis factor for
    one run; the remaining parameters follow the theorem scaling, with alpha,
    beta and lambda_heat taken from `template`.
    """
    epsilons = [float(e) for e in epsilons]
    if len(epsilons) < 3:
        raise ValidationError("a scaling study needs at least 3 epsilons",
                              hypothesis="study")
    if not utilities.strictly_decreasing(epsilons):
        raise ValidationError("study epsilons must be strictly decreasing",
                              hypothesis="study")

    def run(eps: float) -> ResidualReport:
        params = Parameters.theorem_scaling(
            eps, nu_h=nu_h_rule(eps), delta=delta_rule(eps),
            alpha=template.alpha, beta=template.beta,
            lambda_heat=template.lambda_heat)
        tc = coriolis_factory(params.delta, params.alpha)
        g = study_grid(grid, eps, points_per_layer)
        logger.debug("study run epsilon=%g nz=%d", eps, g.nz)
        sol = assemble_stationary(params, tc, stress, g, tolerances)
        return measure_residual(sol, tolerances)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        reports = list(pool.map(run, epsilons))

    series = {
        "r_h1": [r.r_h1 for r in reports],
        "r_31": [r.r_31 for r in reports],
        "layer_h": [r.sizes["layer_h"] for r in reports],
        "interior": [r.sizes["interior"] for r in reports],
    }
    if all(r.nu_h > 0 for r in reports):
        series["r_h2_over_sqrt_nu_h"] = [r.r_h2 / math.sqrt(r.nu_h)
                                         for r in reports]

    slopes = {}
    for name, values in series.items():
        if all(v > 0 for v in values):
            slopes[name] = utilities.fit_power_law(epsilons, values)
        else:
            logger.info("series '%s' has zero entries; no slope fitted", name)

    band = tolerances.slope_band
    checks = {
        "r_h1_decays": ("r_h1" in slopes and slopes["r_h1"].slope > 0
                        and utilities.strictly_decreasing(series["r_h1"])),
        "layer_h_exponent": ("layer_h" in slopes
                             and slopes["layer_h"].within(-0.5, band)),
        "interior_exponent": ("interior" in slopes
                              and slopes["interior"].within(0.0, band)),
    }
    if "r_h2_over_sqrt_nu_h" in series:
        scaled = series["r_h2_over_sqrt_nu_h"]
        checks["r_h2_decays"] = ("r_h2_over_sqrt_nu_h" in slopes
                                 and slopes["r_h2_over_sqrt_nu_h"].slope > 0
                                 and utilities.strictly_decreasing(scaled))
    else:
        checks["viscous_terms_vanish"] = all(
            r.r_h2 == 0 and r.r_32 == 0 for r in reports)

    for name, ok in checks.items():
        if not ok:
            logger.warning("scaling check '%s' failed", name)

    return ScalingStudy(epsilons, delta_rule, nu_h_rule, reports, slopes,
                        checks)


def linear_coriolis_factory(beta: float = 1.0
                            ) -> Callable[[float, float], TruncatedCoriolis]:
    profile = coriolis_profile("linear", beta=beta)
    return lambda delta, alpha: truncate_coriolis(profile, delta, alpha)
