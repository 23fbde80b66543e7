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

"""Exact spectral propagation of z-independent perturbations.

Each Fourier mode (k, xi) of a divergence free horizontal velocity is
multiplied by exp(i omega t - nu_h |k_h|^2 t) with the Rossby frequency
omega = beta k / (eps |k_h|^2). y is periodized on [-L, L).
"""

from dataclasses import dataclass, replace
import logging
from typing import Dict, Tuple

import numpy as np
import scipy.fft

from errors import ConsistencyError, ValidationError
from model_core import Field, Grid
import utilities

logger = logging.getLogger(__name__)


def rossby_frequency(k: np.ndarray, xi: np.ndarray, beta: float,
                     epsilon: float) -> np.ndarray:
    """omega = beta k / (eps (k^2 + xi^2)); the zero wavevector has no
    frequency and maps to 0 when it appears inside an array."""
    k, xi = np.broadcast_arrays(np.asarray(k, float), np.asarray(xi, float))
    k2 = k**2 + xi**2
    zero = k2 == 0
    if k.ndim == 0 and zero:
        raise ValidationError("the Rossby frequency is undefined at the zero"
                              " wavevector", hypothesis="nonzero-wavevector")
    return np.where(zero, 0.0, beta * k / (epsilon * np.where(zero, 1.0, k2)))


def _fft2(v: np.ndarray) -> np.ndarray:
    return scipy.fft.fft2(v, axes=(-2, -1), workers=utilities.fft_workers)


def _ifft2(v: np.ndarray) -> np.ndarray:
    return scipy.fft.ifft2(v, axes=(-2, -1), workers=utilities.fft_workers)


def wavevectors(grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    k = utilities.wavenumbers(grid.nx, 2 * np.pi)
    xi = utilities.wavenumbers(grid.ny, 2 * grid.half_width)
    return np.meshgrid(k, xi, indexing="ij")


def resolved_modes(grid: Grid) -> np.ndarray:
    """False on the Nyquist row and column: odd derivatives are undefined
    there and the modes have no Hermitian partner."""
    mask = np.ones((grid.nx, grid.ny), dtype=bool)
    if grid.nx % 2 == 0:
        mask[grid.nx // 2] = False
    if grid.ny % 2 == 0:
        mask[:, grid.ny // 2] = False
    return mask


@dataclass(frozen=True)
class SpectralState:
    """Fourier coefficients (2, nx, ny) of the horizontal velocity."""
    grid: Grid
    coefficients: np.ndarray
    epsilon: float
    beta: float
    nu_h: float
    time: float = 0.0

    @classmethod
    def from_velocity(cls, v: np.ndarray, grid: Grid, epsilon: float,
                      beta: float = 1.0, nu_h: float = 0.0,
                      div_tol: float = 1e-8) -> "SpectralState":
        coefficients = _fft2(np.asarray(v, dtype=float)) * resolved_modes(grid)
        state = cls(grid, coefficients, epsilon, beta, nu_h)
        defect = state.divergence_defect()
        if defect > div_tol:
            raise ConsistencyError(f"initial velocity is not divergence free"
                                   f" (relative defect {defect:.3g})",
                                   defect=defect)
        return state

    def divergence_defect(self) -> float:
        """max |k v1 + xi v2| relative to max |k_h| |v|."""
        k, xi = wavevectors(self.grid)
        c = self.coefficients
        div = np.abs(k * c[0] + xi * c[1])
        scale = np.max(np.hypot(k, xi)) * np.max(np.abs(c))
        return float(np.max(div) / scale) if scale > 0 else 0.0

    def velocity(self) -> np.ndarray:
        return _ifft2(self.coefficients).real

    def energy(self) -> float:
        v = self.velocity()
        return float(self.grid.horizontal_integral(np.sum(v**2, axis=0)))

    def boundary_amplitude(self) -> float:
        v = self.velocity()
        return float(max(np.max(np.abs(v[:, :, 0])),
                         np.max(np.abs(v[:, :, -1]))))


def streamfunction_velocity(psi: np.ndarray, grid: Grid) -> np.ndarray:
    """v = grad^perp psi = (-dy psi, dx psi), spectrally."""
    k, xi = wavevectors(grid)
    ph = _fft2(psi)
    return _ifft2(np.stack([-1j * xi * ph, 1j * k * ph])).real


def gaussian_packet(grid: Grid, x0: float = np.pi, y0: float = 0.0,
                    width: float = 0.5, wavenumber: int = 5,
                    amplitude: float = 1.0) -> np.ndarray:
    """Streamfunction of a Gaussian packet carried by cos(wavenumber x)."""
    X, Y = grid.mesh()
    dx = np.mod(X - x0 + np.pi, 2 * np.pi) - np.pi
    envelope = np.exp(-(dx**2 + (Y - y0)**2) / (2 * width**2))
    return amplitude * envelope * np.cos(wavenumber * X)


def decompose(v0: np.ndarray, grid: Grid,
              div_tol: float = 1e-8) -> Tuple[Field, Field]:
    """Zonal mean and Rossby part (zero zonal mean) of a velocity."""
    SpectralState.from_velocity(v0, grid, 1.0, div_tol=div_tol)
    zonal = np.broadcast_to(v0.mean(axis=1, keepdims=True), v0.shape)
    return (Field(grid, np.array(zonal), name="zonal"),
            Field(grid, v0 - zonal, name="rossby"))


def propagate(state: SpectralState, t: float) -> SpectralState:
    if t < 0:
        raise ValidationError("propagation time must be non-negative")
    k, xi = wavevectors(state.grid)
    omega = rossby_frequency(k, xi, state.beta, state.epsilon)
    mult = np.exp(1j * omega * t - state.nu_h * (k**2 + xi**2) * t)
    return replace(state, coefficients=mult * state.coefficients,
                   time=state.time + t)


def vorticity(state: SpectralState) -> np.ndarray:
    """zeta_hat = i (k v2_hat - xi v1_hat)."""
    k, xi = wavevectors(state.grid)
    c = state.coefficients
    return 1j * (k * c[1] - xi * c[0]) * resolved_modes(state.grid)


def velocity_from_vorticity(zeta_hat: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral coefficients of grad^perp Lap^-1 zeta; the mean flow (zero
    wavevector) is not recoverable and is set to 0."""
    k, xi = wavevectors(grid)
    k2 = k**2 + xi**2
    psi = np.zeros_like(zeta_hat)
    nonzero = (k2 != 0) & resolved_modes(grid)
    psi[nonzero] = -zeta_hat[nonzero] / k2[nonzero]
    return np.stack([-1j * xi * psi, 1j * k * psi])


def propagate_vorticity(zeta_hat: np.ndarray, state: SpectralState,
                        t: float) -> np.ndarray:
    """Exact solution of d_t zeta + (beta/eps) d_x Lap^-1 zeta
    - nu_h Lap zeta = 0 over time t."""
    k, xi = wavevectors(state.grid)
    omega = rossby_frequency(k, xi, state.beta, state.epsilon)
    return zeta_hat * np.exp(1j * omega * t - state.nu_h * (k**2 + xi**2)
                             * t)


def _trapezoid_weights(points: np.ndarray, low: float, high: float,
                       h: float) -> np.ndarray:
    inside = (points > low) & (points < high)
    edge = np.isclose(points, low) | np.isclose(points, high)
    return h * inside + 0.5 * h * edge


def local_energy(state: SpectralState,
                 box: Tuple[float, float, float, float]) -> float:
    """int_K |v|^2 over K = [x0, x1] x [y0, y1] (trapezoid weights)."""
    x0, x1, y0, y1 = box
    g = state.grid
    if (x0 < 0 or x1 > 2 * np.pi or y0 < -g.half_width or y1 > g.half_width
            or x0 >= x1 or y0 >= y1):
        raise ValidationError(f"box {box} is not inside the domain",
                              hypothesis="energy-box")

    if x1 - x0 >= 2 * np.pi:
        wx = np.full(g.nx, g.dx)
    else:
        wx = _trapezoid_weights(g.x, x0, x1, g.dx)
    wy = _trapezoid_weights(g.y, y0, y1, g.dy)
    if not wx.any() or not wy.any():
        raise ValidationError(f"box {box} contains no grid point",
                              hypothesis="energy-box")

    v = state.velocity()
    return float(np.sum(wx[:, None] * wy[None, :] * np.sum(v**2, axis=0)))


@dataclass
class RossbyRun:
    """Snapshots hold the whole field; the local energies are those of the
    Rossby part, which is the part that leaves the box."""
    times: np.ndarray
    snapshots: list
    total_energy: np.ndarray
    local_energy: np.ndarray
    zonal_energy: np.ndarray
    boundary_amplitude: float
    final_vorticity: np.ndarray

    def to_json(self) -> Dict[str, object]:
        e0 = self.local_energy[0]
        return {
            "times": self.times,
            "total_energy": self.total_energy,
            "local_energy": self.local_energy,
            "local_fraction": (self.local_energy / e0 if e0 > 0
                               else np.zeros_like(self.local_energy)),
            "zonal_energy": self.zonal_energy,
            "boundary_amplitude": self.boundary_amplitude,
        }


def run_rossby(v0: np.ndarray, grid: Grid, epsilon: float, beta: float,
               nu_h: float, times: np.ndarray,
               box: Tuple[float, float, float, float],
               div_tol: float = 1e-8,
               boundary_tol: float = 1e-6) -> RossbyRun:
    """Snapshots and energies of a perturbation at increasing times.

    The zonal part only feels the heat factor exp(-nu_h xi^2 t).
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValidationError("snapshot times must be increasing and"
                              " non-negative")

    zonal, rossby = decompose(v0, grid, div_tol)
    wave0, mean0 = (SpectralState.from_velocity(part.values, grid, epsilon,
                                                beta, nu_h, div_tol)
                    for part in (rossby, zonal))

    snapshots, total, local, zonal_energy = [], [], [], []
    boundary = 0.0
    for t in times:
        wave, mean = propagate(wave0, t), propagate(mean0, t)
        snapshots.append(wave.velocity() + mean.velocity())
        zonal_energy.append(mean.energy())
        # The two parts share no Fourier mode.
        total.append(wave.energy() + zonal_energy[-1])
        local.append(local_energy(wave, box))
        boundary = max(boundary, wave.boundary_amplitude(),
                       mean.boundary_amplitude())
        logger.debug("t=%g energy=%.6e local=%.6e", t, total[-1], local[-1])

    if boundary > boundary_tol:
        logger.warning("Rossby run: amplitude %.3g at y = +-L; the periodic"
                       " extension in y is felt", boundary)

    return RossbyRun(times, snapshots, np.array(total), np.array(local),
                     np.array(zonal_energy), boundary, vorticity(wave))
