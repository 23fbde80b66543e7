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

"""Model parameters, Coriolis profiles, wind stress, grids and fields.

Also home of the hypothesis checks every other module relies on: bounds on
the Coriolis factor, vanishing of the stress at the equator, the zonal
compatibility of the stress and the admissible range of the truncation width.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field, fields, replace
import logging
import math
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate, interpolate

from errors import (CompatibilityError, ConsistencyError, HypothesisError,
                    SingularPointError, ValidationError)

logger = logging.getLogger(__name__)

ArrayLike = Any


@dataclass(frozen=True, slots=True, kw_only=True)
class PhysicalScales:
    """Dimensional scales of the problem, SI units.

    Viscosities and the heat conductivity are already divided by the
    reference density.
    """
    U: float
    H: float
    D: float
    T: float
    Omega0: float
    Az: float
    Ah: float
    sigma_mag: float
    kappa: float
    rho0: float = 1025.0

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not val > 0:
                raise ValidationError(f"physical scale '{f.name}' must be"
                                      f" positive (got {val})",
                                      hypothesis="positive-scales",
                                      field=f.name)

    @property
    def W(self) -> float:
        # Keeps the rescaled velocity divergence free.
        return self.U * self.D / self.H


@dataclass(frozen=True, slots=True, kw_only=True)
class Parameters:
    epsilon: float
    eta: float
    nu_h: float
    nu_z: float
    gamma: float
    beta: float = 1.0
    delta: float
    alpha: float = 0.7
    lambda_heat: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name == "nu_h":
                ok = val >= 0
            else:
                ok = val > 0
            if not (ok and math.isfinite(val)):
                raise ValidationError(f"parameter '{f.name}' must be"
                                      f" positive (got {val})",
                                      hypothesis="positive-parameters",
                                      field=f.name)

        if not 0 < self.alpha < 1:
            raise ValidationError(f"alpha must lie in (0, 1) (got"
                                  f" {self.alpha})",
                                  hypothesis="truncation-exponent",
                                  field="alpha")

    @classmethod
    def theorem_scaling(cls, epsilon: float, nu_h: Optional[float] = None,
                        **kwargs) -> Parameters:
        """eta = nu_z = epsilon, gamma = epsilon^-2; delta and nu_h default
        to epsilon and epsilon^3."""
        if nu_h is None:
            nu_h = epsilon**3
        kwargs.setdefault("delta", epsilon)
        return cls(epsilon=epsilon, eta=epsilon, nu_z=epsilon,
                   gamma=epsilon**-2, nu_h=nu_h, **kwargs)

    def is_theorem_scaling(self, rtol: float = 1e-12) -> bool:
        return (math.isclose(self.eta, self.epsilon, rel_tol=rtol)
                and math.isclose(self.nu_z, self.epsilon, rel_tol=rtol)
                and math.isclose(self.gamma, self.epsilon**-2, rel_tol=rtol))

    def replace(self, **changes) -> Parameters:
        return replace(self, **changes)

    def to_json(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def nondimensionalize(scales: PhysicalScales, *, beta: float = 1.0,
                      delta: Optional[float] = None,
                      alpha: float = 0.7) -> Parameters:
    epsilon = 1 / (scales.T * scales.Omega0)
    return Parameters(
        epsilon=epsilon,
        eta=scales.D / scales.H,
        nu_z=scales.T * scales.Az / scales.D**2,
        nu_h=scales.Ah * scales.T / scales.H**2,
        gamma=scales.sigma_mag * scales.D / (scales.Az * scales.U),
        lambda_heat=scales.kappa * scales.H / (scales.D**2 * scales.U),
        beta=beta,
        delta=epsilon if delta is None else delta,
        alpha=alpha)


@dataclass(frozen=True, slots=True, kw_only=True)
class Tolerances:
    """Every tolerance and margin used by the checks, with defaults matching
    the `tolerances` section of the run schema."""
    floor_ratio: float = 0.5
    slope_tol: float = 0.05
    near_equator: float = 0.25
    order_tol: float = 0.1
    compat_tol: float = 1e-12
    delta_margin: float = 0.1
    enforce_delta_conditions: bool = False
    pumping_mean_tol: float = 1e-8
    integrability_tol: float = 1e-2
    integrability_stencil: float = 8.0
    zero_mean_tol: float = 0.05
    gamma_rtol: float = 1e-9
    wrap_tol: float = 1e-10
    divergence_tol: float = 1e-8
    slope_band: float = 0.1
    drift_tol: float = 1e-8
    regime_margin: float = 0.1
    boundary_tol: float = 1e-6

    @classmethod
    def from_config(cls, section: Optional[Dict[str, Any]]) -> "Tolerances":
        return cls(**(section or {}))

    def to_json(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True, slots=True)
class DeltaVerdict:
    name: str
    ratio: float
    passed: bool


def check_delta_conditions(epsilon: float, nu_h: float, delta: float,
                           margin: float = 0.1) -> List[DeltaVerdict]:
    """Each `a << b` is read as a / b <= margin."""
    assert epsilon > 0 and nu_h >= 0 and delta > 0
    assert 0 < margin < 1

    ratios = [
        ("epsilon^10 << delta", epsilon**10 / delta),
        ("delta << epsilon^(6/11)", delta / epsilon**(6 / 11)),
        ("nu_h^(2/3) epsilon^2 << delta", nu_h**(2 / 3) * epsilon**2 / delta),
        ("nu_h << delta", nu_h / delta),
        ("nu_h << epsilon", nu_h / epsilon),
    ]
    return [DeltaVerdict(name, ratio, ratio <= margin)
            for name, ratio in ratios]


def enforce_delta_conditions(params: Parameters,
                             tolerances: Tolerances) -> List[DeltaVerdict]:
    """Log every failing condition; raise only when enforcement is on."""
    verdicts = check_delta_conditions(params.epsilon, params.nu_h,
                                      params.delta, tolerances.delta_margin)
    failed = [v for v in verdicts if not v.passed]
    for v in failed:
        logger.warning("delta condition '%s' not met (ratio %.3g > %g)",
                       v.name, v.ratio, tolerances.delta_margin)
    if failed and tolerances.enforce_delta_conditions:
        raise HypothesisError(
            f"delta = {params.delta:g} violates '{failed[0].name}'",
            hypothesis="delta-conditions",
            failed=[v.name for v in failed])
    return verdicts


@dataclass(frozen=True, slots=True, kw_only=True)
class Grid:
    """x periodic on [0, 2pi), y on the staggered midpoints of [-L, L] (no
    node at the equator), z uniform on [0, 1] end points included."""
    nx: int
    ny: int
    nz: int
    half_width: float

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            if getattr(self, name) < 4:
                raise ValidationError(f"grid '{name}' must be at least 4",
                                      hypothesis="grid", field=name)
        if self.ny % 2:
            raise ValidationError("grid 'ny' must be even so that no"
                                  " latitude node sits on the equator",
                                  hypothesis="grid", field="ny")
        if self.half_width < 2:
            raise ValidationError("grid 'half_width' must be at least 2",
                                  hypothesis="grid", field="half_width")

    @property
    def dx(self) -> float:
        return 2 * np.pi / self.nx

    @property
    def dy(self) -> float:
        return 2 * self.half_width / self.ny

    @property
    def dz(self) -> float:
        return 1 / (self.nz - 1)

    @property
    def x(self) -> np.ndarray:
        return self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return -self.half_width + self.dy * (np.arange(self.ny) + 0.5)

    @property
    def z(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nz)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def with_nz(self, nz: int) -> Grid:
        return replace(self, nz=nz)

    def horizontal_integral(self, f: np.ndarray) -> np.ndarray:
        """Integral over the last two (x, y) axes; midpoint rule in both."""
        return f.sum(axis=(-2, -1)) * self.dx * self.dy

    def volume_integral(self, f: np.ndarray) -> np.ndarray:
        """Integral over trailing (x, y, z) axes; trapezoid in z."""
        return self.horizontal_integral(
            integrate.trapezoid(f, dx=self.dz, axis=-1))

    def to_json(self) -> Dict[str, Any]:
        return {"nx": self.nx, "ny": self.ny, "nz": self.nz,
                "half_width": self.half_width}


@dataclass(slots=True)
class Field:
    """Samples of a scalar or vector field on a grid.

    `values` has shape (components, nx, ny) for horizontal fields and
    (components, nx, ny, nz) for fields on the whole layer.
    """
    grid: Grid
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        g = self.grid
        if self.values.ndim not in (3, 4):
            raise ValueError(f"field '{self.name}' must have 3 or 4 axes")
        expected = (g.nx, g.ny) if self.values.ndim == 3 else (g.nx, g.ny,
                                                               g.nz)
        if self.values.shape[1:] != expected:
            raise ValueError(f"field '{self.name}' has shape"
                             f" {self.values.shape[1:]}, grid expects"
                             f" {expected}")
        if not np.all(np.isfinite(self.values)):
            raise ConsistencyError(f"field '{self.name}' has non-finite"
                                   " samples", field=self.name)

    @property
    def components(self) -> int:
        return self.values.shape[0]

    @property
    def is_volume(self) -> bool:
        return self.values.ndim == 4

    def l2_norm(self) -> float:
        sq = np.sum(np.abs(self.values)**2, axis=0)
        if self.is_volume:
            return float(np.sqrt(self.grid.volume_integral(sq)))
        return float(np.sqrt(self.grid.horizontal_integral(sq)))

    def __add__(self, other: Field) -> Field:
        assert self.grid == other.grid
        return Field(self.grid, self.values + other.values,
                     name=f"{self.name}+{other.name}")


# Coriolis profile


@dataclass(frozen=True, slots=True)
class CoriolisProfile:
    name: str
    beta: float
    b: Callable[[np.ndarray], np.ndarray]
    db: Callable[[np.ndarray], np.ndarray]
    d2b: Callable[[np.ndarray], np.ndarray]


def _const(c: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda y: np.full(np.shape(y), float(c))


def coriolis_profile(name: str, beta: float = 1.0, coefficient: float = 0.0,
                     length: float = 1.0,
                     samples: Optional[Tuple[ArrayLike, ArrayLike]] = None
                     ) -> CoriolisProfile:
    """Build one of the named Coriolis profiles.

    linear     b = beta y
    cubic      b = beta y + coefficient y^3
    sine       b = coefficient sin(pi y / (2 length))
    quadratic  b = coefficient y^2
    tabulated  cubic spline through `samples` = (y, b)
    """
    if name == "linear":
        return CoriolisProfile(name, beta, lambda y: beta * np.asarray(y),
                               _const(beta), _const(0.0))

    if name == "cubic":
        c = coefficient
        return CoriolisProfile(
            name, beta,
            lambda y: beta * np.asarray(y) + c * np.asarray(y)**3,
            lambda y: beta + 3 * c * np.asarray(y)**2,
            lambda y: 6 * c * np.asarray(y))

    if name == "sine":
        a, k = coefficient, np.pi / (2 * length)
        return CoriolisProfile(name, a * k,
                               lambda y: a * np.sin(k * np.asarray(y)),
                               lambda y: a * k * np.cos(k * np.asarray(y)),
                               lambda y: -a * k**2 * np.sin(k * np.asarray(y)))

    if name == "quadratic":
        a = coefficient
        return CoriolisProfile(name, beta, lambda y: a * np.asarray(y)**2,
                               lambda y: 2 * a * np.asarray(y),
                               _const(2 * a))

    if name == "tabulated":
        assert samples is not None
        spline = interpolate.CubicSpline(np.asarray(samples[0], dtype=float),
                                         np.asarray(samples[1], dtype=float))
        d1 = spline.derivative(1)
        d2 = spline.derivative(2)
        return CoriolisProfile(name, float(d1(0.0)), spline, d1, d2)

    raise ValidationError(f"unknown Coriolis profile '{name}'",
                          hypothesis="coriolis-profile")


def _require_off_equator(y: np.ndarray, what: str) -> None:
    if np.any(y == 0):
        raise SingularPointError(f"{what} is singular at y = 0")


@dataclass(frozen=True, slots=True)
class TruncatedCoriolis:
    """b_delta(y) = b(y) psi(|y| / delta)."""
    base: CoriolisProfile
    delta: float
    alpha: float

    def require_gradient_norms(self) -> None:
        """Horizontal gradients of the layer are square integrable only for
        alpha > 3/5."""
        if self.alpha <= 0.6:
            raise HypothesisError(
                f"horizontal gradients of the boundary layer need alpha > 3/5"
                f" (got {self.alpha})", hypothesis="alpha-gradient-guard",
                alpha=self.alpha)

    def psi(self, s: ArrayLike) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.ones_like(s)
        low = s < 1
        mid = (s >= 1) & (s < 2)
        out[low] = s[low]**-self.alpha
        t = s[mid] - 1
        # Cubic Hermite blend: value 1 at both ends, slope -alpha then 0.
        out[mid] = 1 - self.alpha * t * (1 - t)**2
        return out

    def dpsi(self, s: ArrayLike) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        low = s < 1
        mid = (s >= 1) & (s < 2)
        out[low] = -self.alpha * s[low]**(-self.alpha - 1)
        t = s[mid] - 1
        out[mid] = -self.alpha * (1 - t) * (1 - 3 * t)
        return out

    def b(self, y: ArrayLike) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        _require_off_equator(y, "b_delta")
        return self.base.b(y) * self.psi(np.abs(y) / self.delta)

    def db(self, y: ArrayLike) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        _require_off_equator(y, "b_delta'")
        s = np.abs(y) / self.delta
        return (self.base.db(y) * self.psi(s)
                + self.base.b(y) * self.dpsi(s) * np.sign(y) / self.delta)


def truncate_coriolis(profile: CoriolisProfile, delta: float,
                      alpha: float) -> TruncatedCoriolis:
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha must lie in (0, 1) (got {alpha})",
                              hypothesis="truncation-exponent")
    if not delta > 0:
        raise ValidationError(f"delta must be positive (got {delta})",
                              hypothesis="truncation-width")
    return TruncatedCoriolis(profile, delta, alpha)


@dataclass(frozen=True, slots=True)
class DecayRates:
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray

    def branches(self) -> Tuple[Tuple[int, np.ndarray], Tuple[int,
                                                               np.ndarray]]:
        return ((1, self.lambda_plus), (-1, self.lambda_minus))


def decay_rates(tc: TruncatedCoriolis, y: ArrayLike) -> DecayRates:
    """(lambda^pm)^2 = -+ i b_delta with positive real part."""
    y = np.asarray(y, dtype=float)
    _require_off_equator(y, "the decay rate")
    bd = tc.b(y)
    lp = (1 - 1j * np.sign(bd)) / np.sqrt(2) * np.sqrt(np.abs(bd))
    return DecayRates(lp, np.conj(lp))


def decay_rate_slopes(tc: TruncatedCoriolis, y: ArrayLike,
                      rates: DecayRates) -> Tuple[np.ndarray, np.ndarray]:
    """d lambda^pm / dy; lambda scales like |b_delta|^(1/2)."""
    y = np.asarray(y, dtype=float)
    ratio = tc.db(y) / (2 * tc.b(y))
    return rates.lambda_plus * ratio, rates.lambda_minus * ratio


# Validation reports


@dataclass(slots=True)
class ClauseResult:
    name: str
    hypothesis: str
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)
    offending_y: Optional[float] = None

    def to_json(self) -> Dict[str, Any]:
        return {"name": self.name, "hypothesis": self.hypothesis,
                "passed": self.passed, "details": self.details,
                "offending_y": self.offending_y}


@dataclass(slots=True)
class ValidationReport:
    subject: str
    clauses: List[ClauseResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)

    def failures(self) -> List[ClauseResult]:
        return [c for c in self.clauses if not c.passed]

    def clause(self, name: str) -> ClauseResult:
        return next(c for c in self.clauses if c.name == name)

    # Overload +=
    def __iadd__(self, other: ValidationReport) -> ValidationReport:
        self.subject = f"{self.subject}, {other.subject}"
        self.clauses.extend(other.clauses)
        return self

    def raise_on_failure(self) -> None:
        for c in self.failures():
            msg = f"{self.subject}: clause '{c.name}' failed"
            if c.offending_y is not None:
                msg += f" at y = {c.offending_y:.6g}"
            if c.hypothesis == "compatibility":
                raise CompatibilityError(msg, **c.details)
            raise HypothesisError(msg, hypothesis=c.hypothesis, **c.details)

    def to_json(self) -> Dict[str, Any]:
        return {"subject": self.subject, "passed": self.passed,
                "clauses": [c.to_json() for c in self.clauses]}

    def print(self, file=None) -> None:
        file = file or sys.stdout
        print(f"*** {self.subject}: {'pass' if self.passed else 'FAIL'}",
              file=file)
        for c in self.clauses:
            where = ("" if c.offending_y is None
                     else f" (y = {c.offending_y:.4g})")
            print(f"  {c.name}: {'pass' if c.passed else 'FAIL'}{where}",
                  file=file)


def validate_coriolis(profile: CoriolisProfile, grid: Grid,
                      floor_ratio: float = 0.5,
                      slope_tol: float = 0.05) -> ValidationReport:
    """Check the Coriolis hypotheses on the sampled latitudes."""
    y = grid.y
    b = profile.b(y)
    db = profile.db(y)
    report = ValidationReport(f"coriolis profile '{profile.name}'")

    bad = ~np.isfinite(b) | (b == 0)
    report.clauses.append(ClauseResult(
        "nonvanishing", "coriolis-bounds", not bad.any(),
        offending_y=float(y[bad][0]) if bad.any() else None))

    far = np.abs(y) >= 1
    abs_far = np.abs(b[far])
    y_far = y[far]
    nearest = np.abs(y_far) == np.abs(y_far).min()
    reference = float(abs_far[nearest].min())
    worst = int(np.argmin(abs_far))
    bounded = reference > 0 and abs_far[worst] >= floor_ratio * reference
    report.clauses.append(ClauseResult(
        "bounded-below", "coriolis-bounds", bool(bounded),
        {"min_abs_b": float(abs_far[worst]), "reference": reference,
         "floor_ratio": floor_ratio},
        offending_y=None if bounded else float(y_far[worst])))

    worst = int(np.argmin(db))
    derivative_ok = bool(np.all(np.isfinite(db)) and db[worst] > 0)
    report.clauses.append(ClauseResult(
        "derivative-bounds", "coriolis-bounds", derivative_ok,
        {"min_db": float(db[worst]), "max_db": float(np.max(db))},
        offending_y=None if derivative_ok else float(y[worst])))

    equator = np.argsort(np.abs(y))[:2]
    if profile.beta > 0:
        ratios = b[equator] / (profile.beta * y[equator])
        slope_ok = bool(np.max(np.abs(ratios - 1)) <= slope_tol)
    else:
        ratios = np.full(2, np.nan)
        slope_ok = False
    report.clauses.append(ClauseResult(
        "equatorial-slope", "coriolis-bounds", slope_ok,
        {"ratios": ratios.tolist(), "beta": profile.beta,
         "slope_tol": slope_tol},
        offending_y=None if slope_ok else float(y[equator[0]])))

    for c in report.failures():
        logger.info("Coriolis clause '%s' failed: %s", c.name, c.details)

    return report


# Wind stress


@dataclass(frozen=True, slots=True)
class StressSample:
    """sigma and its derivatives; every array has a leading axis of size 2
    (the two components)."""
    sigma: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    dxx: np.ndarray
    dxy: np.ndarray
    dyy: np.ndarray

    @property
    def perp(self) -> np.ndarray:
        return np.stack([-self.sigma[1], self.sigma[0]])

    @property
    def div(self) -> np.ndarray:
        return self.dx[0] + self.dy[1]

    @property
    def rot(self) -> np.ndarray:
        return self.dx[1] - self.dy[0]


class WindStress(abc.ABC):
    def __init__(self, name: str, order: int):
        self.name = name
        self.order = order

    @abc.abstractmethod
    def sample(self, x: ArrayLike, y: ArrayLike) -> StressSample:
        """sigma and derivatives up to order 2 at broadcast (x, y)."""

    def sigma(self, x: ArrayLike, y: ArrayLike) -> np.ndarray:
        return self.sample(x, y).sigma


@dataclass(frozen=True, slots=True, kw_only=True)
class StressComponent:
    """a * y^power * exp(-((|y| - center) / width)^2) * (offset + cos(m x +
    phase)); no Gaussian factor when width is None."""
    amplitude: float = 0.0
    power: int = 2
    width: Optional[float] = None
    center: float = 0.0
    offset: float = 0.0
    wavenumber: int = 1
    phase: float = 0.0

    def meridional(self, y: np.ndarray) -> Tuple[np.ndarray, ...]:
        k = self.power
        p = y**k
        dp = k * y**(k - 1) if k >= 1 else np.zeros_like(y)
        d2p = k * (k - 1) * y**(k - 2) if k >= 2 else np.zeros_like(y)

        if self.width is None:
            return p, dp, d2p

        w = self.width
        r = (np.abs(y) - self.center) / w
        g = np.exp(-r**2)
        dg = -2 * r / w * np.sign(y) * g
        d2g = (4 * r**2 - 2) / w**2 * g
        return p * g, dp * g + p * dg, d2p * g + 2 * dp * dg + p * d2g

    def zonal(self, x: np.ndarray) -> Tuple[np.ndarray, ...]:
        m = self.wavenumber
        arg = m * x + self.phase
        return (self.offset + np.cos(arg), -m * np.sin(arg),
                -m**2 * np.cos(arg))

    def derivatives(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray,
                                                                 ...]:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        if self.amplitude == 0:
            zero = np.zeros_like(x)
            return (zero,) * 6
        m, dm, d2m = self.meridional(y)
        f, df, d2f = self.zonal(x)
        a = self.amplitude
        return (a * m * f, a * m * df, a * dm * f, a * m * d2f, a * dm * df,
                a * d2m * f)


class SeparableStress(WindStress):
    def __init__(self, first: StressComponent, second: StressComponent,
                 order: int = 2, name: str = "separable"):
        super().__init__(name, order)
        self.components = (first, second)

    def sample(self, x: ArrayLike, y: ArrayLike) -> StressSample:
        parts = [c.derivatives(x, y) for c in self.components]
        return StressSample(*(np.stack([parts[0][i], parts[1][i]])
                              for i in range(6)))

    def scaled(self, factor: float) -> SeparableStress:
        return SeparableStress(
            *(replace(c, amplitude=factor * c.amplitude)
              for c in self.components), order=self.order, name=self.name)


class TabulatedStress(WindStress):
    """Bicubic spline through samples on a tensor (x, y) grid, periodic in
    x."""

    def __init__(self, x: ArrayLike, y: ArrayLike, sigma1: ArrayLike,
                 sigma2: ArrayLike, order: int = 2, name: str = "tabulated"):
        super().__init__(name, order)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        period = 2 * np.pi
        x_ext = np.concatenate([x - period, x, x + period])
        self.splines = [
            interpolate.RectBivariateSpline(
                x_ext, y, np.concatenate([np.asarray(s, float)] * 3, axis=0),
                kx=3, ky=3, s=0)
            for s in (sigma1, sigma2)
        ]

    def sample(self, x: ArrayLike, y: ArrayLike) -> StressSample:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        xm = np.mod(x, 2 * np.pi)
        orders = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        return StressSample(*(
            np.stack([s.ev(xm, y, dx=i, dy=j) for s in self.splines])
            for i, j in orders))


def _fitted_exponent(abs_y: np.ndarray, vals: np.ndarray) -> float:
    keep = vals > 1e-300
    if np.count_nonzero(keep) < 2:
        return math.inf
    slope, _ = np.polyfit(np.log(abs_y[keep]), np.log(vals[keep]), 1)
    return float(slope)


def validate_windstress(stress: WindStress, grid: Grid,
                        near_equator: float = 0.25,
                        order_tol: float = 0.1,
                        compat_tol: float = 1e-12) -> ValidationReport:
    """Check the zonal compatibility and the equatorial vanishing order."""
    X, Y = grid.mesh()
    s = stress.sample(X, Y)
    y = grid.y
    report = ValidationReport(f"wind stress '{stress.name}'")

    scale = max(1.0, float(np.max(np.abs(s.sigma))))
    zonal_mean = s.sigma[0].mean(axis=0)
    worst = int(np.argmax(np.abs(zonal_mean)))
    compatible = abs(zonal_mean[worst]) <= compat_tol * scale
    report.clauses.append(ClauseResult(
        "zonal-mean", "compatibility", bool(compatible),
        {"max_abs_zonal_mean": float(abs(zonal_mean[worst]))},
        offending_y=None if compatible else float(y[worst])))

    near = (np.abs(y) <= near_equator)
    if np.count_nonzero(near) < 4:
        near = np.zeros_like(near)
        near[np.argsort(np.abs(y))[:6]] = True
    abs_y = np.abs(y[near])

    k = stress.order
    targets = [
        ("sigma", np.linalg.norm(s.sigma, axis=0), k),
        ("dx_sigma", np.linalg.norm(s.dx, axis=0), k),
        ("dy_sigma", np.linalg.norm(s.dy, axis=0), k - 1),
    ]
    for name, mag, target in targets:
        profile = mag.max(axis=0)[near]
        exponent = _fitted_exponent(abs_y, profile)
        constant = float(np.max(profile / abs_y**target))
        ok = exponent >= target - order_tol
        report.clauses.append(ClauseResult(
            f"vanishing-order-{name}", "stress-vanishing-order", bool(ok),
            {"fitted_exponent": exponent, "target": target,
             "fitted_constant": constant},
            offending_y=None if ok else float(abs_y.min())))

    return report
