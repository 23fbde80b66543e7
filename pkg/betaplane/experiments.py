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

"""The CLI subcommands and the builders that turn configuration sections
into model objects."""

import math
from typing import Any, Callable, Dict, List, Optional, Tuple, Type

import numpy as np

from errors import ConfigError, ValidationError
import ekman
from interfaces import Experiment
import interior
from model_core import (CoriolisProfile, Grid, Parameters, PhysicalScales,
                        SeparableStress, StressComponent, TabulatedStress,
                        Tolerances, TruncatedCoriolis, WindStress,
                        check_delta_conditions, coriolis_profile,
                        nondimensionalize, truncate_coriolis,
                        validate_coriolis, validate_windstress)
import poincare
import residual
import rossby
import thermocline
import utilities


# Builders


def build_parameters(section: Dict[str, Any]) -> Parameters:
    """Missing entries follow the theorem scaling of `epsilon`."""
    eps = section["epsilon"]
    kwargs = {"eta": eps, "nu_z": eps, "gamma": eps**-2, "nu_h": eps**3,
              "delta": eps}
    kwargs.update(section)
    return Parameters(**kwargs)


def build_coriolis(section: Dict[str, Any]) -> CoriolisProfile:
    samples = None
    if "samples" in section:
        samples = (section["samples"]["y"], section["samples"]["b"])
    return coriolis_profile(section.get("profile", "linear"),
                            beta=section.get("beta", 1.0),
                            coefficient=section.get("coefficient", 0.0),
                            length=section.get("length", 1.0),
                            samples=samples)


def coriolis_factory(profile: CoriolisProfile
                     ) -> Callable[[float, float], TruncatedCoriolis]:
    return lambda delta, alpha: truncate_coriolis(profile, delta, alpha)


def load_stress_table(file_name: str) -> Tuple[np.ndarray, ...]:
    """CSV with header x,y,sigma1,sigma2 on a tensor grid (any row order)."""
    try:
        table = np.loadtxt(file_name, delimiter=",", skiprows=1, ndmin=2)
    except OSError as e:
        raise ConfigError(f"cannot read stress table '{file_name}': {e}",
                          file=file_name) from e
    if table.shape[1] != 4:
        raise ConfigError(f"stress table '{file_name}' must have 4 columns",
                          file=file_name)

    x = np.unique(table[:, 0])
    y = np.unique(table[:, 1])
    if x.size * y.size != table.shape[0]:
        raise ConfigError(f"stress table '{file_name}' is not a tensor grid",
                          file=file_name)
    order = np.lexsort((table[:, 1], table[:, 0]))
    t = table[order]
    shape = (x.size, y.size)
    return x, y, t[:, 2].reshape(shape), t[:, 3].reshape(shape)


def build_stress(section: Dict[str, Any]) -> WindStress:
    kind = section.get("type", "separable")
    order = section.get("order", 2)
    if kind == "tabulated":
        x, y, s1, s2 = load_stress_table(section["file"])
        return TabulatedStress(x, y, s1, s2, order=order)

    first, second = (StressComponent(**c) for c in section["components"])
    return SeparableStress(first, second, order=order,
                           name=section.get("name", "separable"))


def build_theta1(section: Optional[Dict[str, Any]]
                 ) -> thermocline.SurfaceTemperature:
    return thermocline.SurfaceTemperature(**(section or {}))


def build_grid(section: Dict[str, Any]) -> Grid:
    return Grid(**section)


def power_rule(section: Optional[Dict[str, Any]],
               default: residual.PowerRule) -> residual.PowerRule:
    if section is None:
        return default
    return residual.PowerRule(**section)


def _require(config: Dict[str, Any], *sections: str) -> None:
    missing = [s for s in sections if s not in config]
    if missing:
        raise ConfigError(f"missing configuration section(s):"
                          f" {', '.join(missing)}", missing=missing)


class _ModelExperiment(Experiment):
    """Shared access to the model sections of the configuration."""

    def __init__(self, name: str, config: Dict[str, Any], threads: int = 1):
        super().__init__(name, config, threads)
        self.tolerances = Tolerances.from_config(config.get("tolerances"))
        self.emitted: List[str] = []

    def emit(self, path: str) -> str:
        self.emitted.append(path)
        return path

    def write_json(self, out_dir: str, file_name: str, kind: str,
                   payload: Dict[str, Any]) -> str:
        return self.emit(utilities.write_json(self.path(out_dir, file_name),
                                              kind, payload))

    def write_csv(self, out_dir: str, file_name: str, header, columns) -> str:
        return self.emit(utilities.write_csv(self.path(out_dir, file_name),
                                             header, columns))

    @property
    def z_stride(self) -> int:
        return self.config.get("export", {}).get("z_stride", 1)

    def parameters(self) -> Parameters:
        return build_parameters(self.config["parameters"])

    def grid(self) -> Grid:
        return build_grid(self.config["grid"])

    def profile(self) -> CoriolisProfile:
        return build_coriolis(self.config.get("coriolis", {}))

    def stress(self) -> WindStress:
        return build_stress(self.config["stress"])


class ValidateExperiment(_ModelExperiment):
    """Hypothesis checks only; nothing is solved."""

    COLUMNS = 50

    def run(self, out_dir: str) -> List[str]:
        _require(self.config, "parameters", "grid", "stress")
        tol = self.tolerances
        params = self.parameters()
        grid = self.grid()
        profile = self.profile()
        stress = self.stress()

        report = validate_coriolis(profile, grid, tol.floor_ratio,
                                   tol.slope_tol)
        report += validate_windstress(stress, grid, tol.near_equator,
                                      tol.order_tol, tol.compat_tol)
        verdicts = check_delta_conditions(params.epsilon, params.nu_h,
                                          params.delta, tol.delta_margin)
        columns = self.column_consistency(params, profile, stress, grid)
        self.log("%s", "pass" if report.passed else "FAIL")
        report.print()

        self.write_json(out_dir, "validation.json", "validation", {
            "parameters": params,
            "grid": grid,
            "report": report,
            "delta_conditions": verdicts,
            "gradient_norms_allowed": params.alpha > 0.6,
            "column_consistency": columns,
            "tolerances": tol,
        })
        report.raise_on_failure()
        return self.emitted

    def column_consistency(self, params: Parameters,
                           profile: CoriolisProfile, stress: WindStress,
                           grid: Grid) -> Dict[str, Any]:
        """Closed-form column norms of the surface layer against quadrature
        at randomly drawn columns."""
        rng = np.random.default_rng(self.config.get("seed", 0))
        x = rng.uniform(0, 2 * np.pi, self.COLUMNS)
        y = (rng.uniform(0.1, grid.half_width, self.COLUMNS)
             * rng.choice([-1.0, 1.0], self.COLUMNS))
        tc = truncate_coriolis(profile, params.delta, params.alpha)
        cols = ekman.column_l2_norms(
            ekman.BoundaryLayerProfile(stress, tc, params.epsilon), x, y)

        scale = np.maximum(cols.horizontal, 1e-300)
        err = np.abs(cols.horizontal - cols.horizontal_quadrature) / scale
        err = np.where(cols.horizontal > 0, err, 0.0)
        return {"columns": self.COLUMNS, "seed": self.config.get("seed", 0),
                "max_relative_error": float(np.max(err))}


class ScalesExperiment(_ModelExperiment):
    """Dimensionless parameters of a set of physical scales."""

    def run(self, out_dir: str) -> List[str]:
        _require(self.config, "scales")
        scales = PhysicalScales(**self.config["scales"])
        section = self.config.get("parameters", {})
        params = nondimensionalize(scales, beta=section.get("beta", 1.0),
                                   delta=section.get("delta"),
                                   alpha=section.get("alpha", 0.7))

        eps = params.epsilon
        margin = self.tolerances.regime_margin
        ratios = {
            "eta_over_epsilon": params.eta / eps,
            "nu_z_over_epsilon": params.nu_z / eps,
            "gamma_times_epsilon_squared": params.gamma * eps**2,
        }
        same_order = {k: margin <= v <= 1 / margin for k, v in ratios.items()}
        small = params.nu_h / eps <= margin
        self.log("epsilon=%g eta=%g nu_z=%g nu_h=%g gamma=%g", eps,
                 params.eta, params.nu_z, params.nu_h, params.gamma)

        self.write_json(out_dir, "scales.json", "scales", {
            "scales": {"U": scales.U, "H": scales.H, "D": scales.D,
                       "T": scales.T, "Omega0": scales.Omega0,
                       "Az": scales.Az, "Ah": scales.Ah,
                       "sigma_mag": scales.sigma_mag, "kappa": scales.kappa,
                       "rho0": scales.rho0, "W": scales.W},
            "parameters": params,
            "ratios": ratios,
            "same_order": same_order,
            "nu_h_over_epsilon": params.nu_h / eps,
            "nu_h_small": small,
            "theorem_scaling": all(same_order.values()) and small,
            "margin": margin,
        })
        return self.emitted


class StationaryExperiment(_ModelExperiment):
    """Stationary solution, its fields and its residual."""

    def run(self, out_dir: str) -> List[str]:
        _require(self.config, "parameters", "grid", "stress")
        params = self.parameters()
        grid = self.grid()
        tc = truncate_coriolis(self.profile(), params.delta, params.alpha)
        sol = interior.assemble_stationary(params, tc, self.stress(), grid,
                                           self.tolerances)
        report = residual.measure_residual(sol, self.tolerances)
        gradients = self.config.get("export", {}).get("gradient_norms",
                                                      tc.alpha > 0.6)
        norms = ekman.layer_norms(sol.profile, grid, gradients)

        u = sol.velocity()
        p = sol.pressure()
        stride = self.z_stride
        z = grid.z[::stride]
        X, Y, Z = np.meshgrid(grid.x, grid.y, z, indexing="ij")
        self.write_csv(out_dir, "stationary_fields.csv",
                       ("x", "y", "z", "u1", "u2", "u3", "p"),
                       (X, Y, Z, u[0][..., ::stride], u[1][..., ::stride],
                        u[2][..., ::stride], p[..., ::stride]))

        X, Y = grid.mesh()
        self.write_csv(out_dir, "stationary_surface.csv",
                       ("x", "y", "w", "u1_int", "u2_int", "p_int"),
                       (X, Y, sol.interior.w, sol.interior.u_h[0],
                        sol.interior.u_h[1], sol.interior.p))

        divergence = sol.divergence()
        self.log("r_h1=%.3e r_h2=%.3e", report.r_h1, report.r_h2)
        self.write_json(out_dir, "residual.json", "residual", {
            "solution": sol,
            "residual": report,
            "layer_norms": norms,
            "max_abs_divergence": float(np.max(np.abs(divergence))),
            "tolerances": self.tolerances,
        })
        return self.emitted


class ResidualStudyExperiment(_ModelExperiment):
    """Residual sizes along a ladder of Rossby numbers."""

    def run(self, out_dir: str) -> List[str]:
        _require(self.config, "parameters", "grid", "stress", "study")
        study_cfg = self.config["study"]
        template = self.parameters()
        study = residual.scaling_study(
            template, study_cfg["epsilons"],
            coriolis_factory(self.profile()), self.stress(), self.grid(),
            delta_rule=power_rule(study_cfg.get("delta_rule"),
                                  residual.PowerRule()),
            nu_h_rule=power_rule(study_cfg.get("nu_h_rule"),
                                 residual.PowerRule(1.0, 3.0)),
            points_per_layer=study_cfg.get("points_per_layer", 20),
            tolerances=self.tolerances, threads=self.threads)
        self.log("study %s", "passed" if study.passed else "FAILED")

        rows = study.rows()
        header = list(rows[0])
        self.write_csv(out_dir, "residual_study.csv", header,
                       [np.array([r[h] for r in rows]) for h in header])
        self.write_json(out_dir, "residual_study.json", "residual-study", {
            "study": study,
            "tolerances": self.tolerances,
        })
        return self.emitted


class RossbyExperiment(_ModelExperiment):
    """z-independent perturbation: zonal flow plus a Rossby wave packet."""

    def initial_velocity(self, grid: Grid) -> np.ndarray:
        cfg = self.config.get("rossby", {})
        psi = rossby.gaussian_packet(grid, **cfg.get("packet", {}))
        v0 = rossby.streamfunction_velocity(psi, grid)

        zonal = cfg.get("zonal", {"amplitude": 0.0})
        if zonal.get("amplitude", 0.0):
            _, Y = grid.mesh()
            v0[0] += zonal["amplitude"] * np.exp(
                -(Y / zonal.get("width", 1.0))**2)
        return v0

    def default_box(self, grid: Grid) -> Tuple[float, float, float, float]:
        """Twice the packet width around its center."""
        packet = self.config.get("rossby", {}).get("packet", {})
        x0 = packet.get("x0", np.pi)
        y0 = packet.get("y0", 0.0)
        w = 2 * packet.get("width", 0.5)
        return (max(0.0, x0 - w), min(2 * np.pi, x0 + w),
                max(-grid.half_width, y0 - w), min(grid.half_width, y0 + w))

    def run(self, out_dir: str) -> List[str]:
        _require(self.config, "parameters", "grid", "rossby")
        cfg = self.config["rossby"]
        params = self.parameters()
        grid = self.grid()
        box = tuple(cfg.get("box", self.default_box(grid)))

        result = rossby.run_rossby(
            self.initial_velocity(grid), grid, params.epsilon, params.beta,
            params.nu_h, cfg.get("times", [0.0, 1.0]), box,
            self.tolerances.divergence_tol, self.tolerances.boundary_tol)

        X, Y = grid.mesh()
        for i, v in enumerate(result.snapshots):
            self.write_csv(out_dir, f"rossby_{i}.csv", ("x", "y", "v1", "v2"),
                           (X, Y, v[0], v[1]))

        k, xi = rossby.wavevectors(grid)
        zeta = result.final_vorticity
        self.write_csv(out_dir, "rossby_spectrum.csv",
                       ("k", "xi_y", "re", "im"), (k, xi, zeta.real,
                                                   zeta.imag))
        self.log("local energy fraction at t=%g: %.3g", result.times[-1],
                 result.local_energy[-1] / result.local_energy[0]
                 if result.local_energy[0] > 0 else 0.0)
        self.write_json(out_dir, "rossby.json", "rossby", {
            "parameters": params,
            "grid": grid,
            "box": box,
            "run": result,
        })
        return self.emitted


class PoincareRaysExperiment(_ModelExperiment):
    """Bicharacteristics of the Poincare waves, single rays and an
    ensemble launched from horizontal initial data."""

    NOTES = ("k^2 is dropped against xi^2/eps^2 in the damping rate",
             "the eps d_zz contribution to the damping is not included")

    def run(self, out_dir: str) -> List[str]:
        _require(self.config, "parameters", "rays")
        cfg = self.config["rays"]
        params = self.parameters()
        tol = self.tolerances
        k3 = cfg.get("k3", 1)
        band = tuple(cfg.get("band", [-1.0, 1.0]))
        t_end, dt = cfg.get("t_end", 100.0), cfg.get("dt", 1e-3)
        sample_every = cfg.get("sample_every", 100)

        starts = [poincare.RayState.launch(r["y0"], r.get("mode", 1), k3,
                                           params.beta, r.get("xi0", 0.0))
                  for r in cfg.get("launch", [])]
        rays = []
        for i, start in enumerate(starts):
            traj = poincare.integrate_ray(start, t_end, dt, tol.drift_tol,
                                          sample_every)
            weight = poincare.damping_weight(traj, params.nu_h,
                                             params.epsilon)
            self.write_csv(out_dir, f"ray_{i}.csv",
                           ("t", "Y", "Xi", "h", "weight"),
                           (traj.times, traj.Y, traj.Xi, traj.h(), weight))
            rays.append(self.describe(traj, band, cfg, params))

        ensemble = None
        if "ensemble" in cfg:
            ensemble = self.ensemble(cfg["ensemble"], k3, t_end, dt, band,
                                     sample_every, params)

        self.write_json(out_dir, "rays.json", "rays", {
            "parameters": params,
            "k3": k3,
            "band": band,
            "regime": poincare.regime(params.nu_h, params.epsilon,
                                      tol.regime_margin),
            "rays": rays,
            "ensemble": ensemble,
            "notes": self.NOTES,
        })
        return self.emitted

    def describe(self, traj: poincare.RayTrajectory,
                 band: Tuple[float, float], cfg: Dict[str, Any],
                 params: Parameters) -> Dict[str, Any]:
        s = traj.start
        out = {
            "y0": s.Y, "xi0": s.Xi, "mode": int(s.mode), "h0": s.h0,
            "max_drift": traj.max_drift(),
            "level_line_defect": traj.level_line_defect(),
            "xi_monotone": bool(np.all(np.diff(traj.Xi) < 0)
                                or np.all(np.diff(traj.Xi) > 0)),
            "escape": poincare.escape_diagnostics(traj, band,
                                                  cfg.get("fit_from")),
            "final_weight": float(poincare.damping_weight(
                traj, params.nu_h, params.epsilon)[-1]),
            "final_endpoint_weight": float(poincare.endpoint_damping_weight(
                traj, params.nu_h, params.epsilon)[-1]),
        }
        if cfg.get("reverse_check", False):
            back = poincare.integrate_ray(traj.end, float(traj.times[-1]),
                                          cfg.get("dt", 1e-3),
                                          self.tolerances.drift_tol,
                                          cfg.get("sample_every", 100),
                                          reverse=True)
            out["return_error"] = math.hypot(back.Y[-1] - s.Y,
                                             back.Xi[-1] - s.Xi)
        self.log("ray y0=%g mode=%+d: drift %.2e", s.Y, int(s.mode),
                 out["max_drift"])
        return out

    def ensemble(self, cfg: Dict[str, Any], k3: int, t_end: float, dt: float,
                 band: Tuple[float, float], sample_every: int,
                 params: Parameters) -> poincare.RayEnsemble:
        half_width = cfg.get("half_width", 2.0)
        n = cfg.get("samples", 16)
        # Staggered samples; none sits on the equator.
        dy = 2 * half_width / n
        y = -half_width + dy * (np.arange(n) + 0.5)

        def profile(c: Dict[str, Any]) -> np.ndarray:
            return c.get("amplitude", 0.0) * np.exp(
                -((y - c.get("center", 0.0)) / c.get("width", 1.0))**2)

        return poincare.launch_ensemble(
            profile(cfg.get("u1", {})), profile(cfg.get("u2", {})), y, k3,
            t_end, dt, params.nu_h, params.epsilon, band, params.beta,
            self.tolerances.drift_tol, sample_every, self.threads)


class ThermoclineExperiment(_ModelExperiment):
    """Temperature solve against the layered approximation, for one Rossby
    number or a decreasing ladder of them."""

    def run(self, out_dir: str) -> List[str]:
        _require(self.config, "parameters", "grid", "stress")
        cfg = self.config.get("thermocline", {})
        params = self.parameters()
        grid = self.grid()
        profile = self.profile()
        stress = self.stress()
        theta1 = build_theta1(self.config.get("theta1"))
        solver = {"tol": cfg.get("tol", 1e-8),
                  "max_iter": cfg.get("max_iter", 500),
                  "damping": cfg.get("damping", 1.0)}

        if "epsilons" in cfg:
            study = thermocline.convergence_study(
                cfg["epsilons"], params, coriolis_factory(profile), stress,
                theta1, grid, cfg.get("points_per_layer", 10),
                self.tolerances, threads=self.threads, **solver)
            runs = study.runs
            summary: Dict[str, Any] = {"study": study}
        else:
            tc = truncate_coriolis(profile, params.delta, params.alpha)
            run = thermocline.thermocline_run(params, tc, stress, theta1,
                                              grid, self.tolerances, **solver)
            runs = [run]
            summary = {"run": run}

        stride = self.z_stride
        for r in runs:
            g = r.grid
            X, Y, Z = np.meshgrid(g.x, g.y, g.z[::stride], indexing="ij")
            self.write_csv(out_dir, f"thermocline_{r.epsilon:g}.csv",
                           ("x", "y", "z", "theta", "theta_app"),
                           (X, Y, Z, r.theta[..., ::stride],
                            r.theta_app[..., ::stride]))

        self.write_json(out_dir, "thermocline.json", "thermocline", {
            "parameters": params,
            "theta1": theta1,
            **summary,
        })
        return self.emitted


EXPERIMENTS: Dict[str, Type[Experiment]] = {
    "validate": ValidateExperiment,
    "scales": ScalesExperiment,
    "stationary": StationaryExperiment,
    "residual-study": ResidualStudyExperiment,
    "rossby": RossbyExperiment,
    "poincare-rays": PoincareRaysExperiment,
    "thermocline": ThermoclineExperiment,
}


def create_experiment(name: str, config: Dict[str, Any],
                      threads: int = 1) -> Experiment:
    kind = config.get("experiment", name)
    if kind != name:
        raise ConfigError(f"configuration is for '{kind}', not '{name}'",
                          experiment=kind)
    if name not in EXPERIMENTS:
        raise ValidationError(f"unknown experiment '{name}'")
    return EXPERIMENTS[name](name, config, threads)
