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

"""Collection of general purpose utilities."""

import csv
import dataclasses
from dataclasses import dataclass
import hashlib
import json
import logging
import math
import os
import sys
import threading
import time
from typing import Any, Callable, Dict, Iterable, Optional, Sequence

import numpy as np
import scipy.fft
from scipy import stats

SCHEMA_VERSION = 1

# Number of threads handed to scipy.fft; set once by the front-end.
fft_workers = 1


def logging_config(level: int) -> None:
    """Configure the root logger to track events starting from `level`.

    If tracked, WARNING events (and above) go to stderr, other events go to
    stdout.
    """
    # Log messages below WARNING go to stdout.
    stdout_h = logging.StreamHandler(sys.stdout)
    stdout_h.setLevel(logging.DEBUG)
    stdout_h.addFilter(lambda record: record.levelno < logging.WARNING)

    # Log messages that are WARNING and above go to stderr.
    stderr_h = logging.StreamHandler(sys.stderr)
    stderr_h.setLevel(logging.WARNING)

    formatter = logging.Formatter("[%(asctime)s] %(message)s",
                                  datefmt="%H:%M:%S")
    stdout_h.setFormatter(formatter)
    stderr_h.setFormatter(formatter)

    logging.basicConfig(handlers=[stdout_h, stderr_h],
                        level=level, force=True)


class CallEvery():
    """Call some function every few seconds.

    `with CallEvery(s, f) as c: ...` calls `f()` every `s` seconds, while
    inside the with block. Used to report progress of long studies.
    """

    def __init__(self, period: float, f: Callable[[], None]):
        self.period = period
        self.f = f
        self.running = False
        self.timer = None
        self.t = None

    def __enter__(self) -> "CallEvery":
        self.running = True
        self.t = time.time() + self.period
        self.timer = threading.Timer(max(self.t - time.time(), 0), self._run)
        self.timer.daemon = True
        self.timer.start()
        return self

    def __exit__(self, exc_type, exc_value, traceback) -> bool:
        self.running = False
        if self.timer:
            self.timer.cancel()
        return False

    def _run(self):
        if self.running:
            self.f()
            self.t += self.period
            self.timer = threading.Timer(max(self.t - time.time(), 0),
                                         self._run)
            self.timer.daemon = True
            self.timer.start()


@dataclass(frozen=True, slots=True)
class SlopeFit:
    """Least squares fit of log(y) = slope * log(x) + intercept."""
    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float

    def within(self, target: float, tol: float) -> bool:
        return abs(self.slope - target) <= tol

    def to_json(self) -> Dict[str, float]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "ci95": [self.ci_low, self.ci_high],
        }


def fit_power_law(xs: Sequence[float], ys: Sequence[float]) -> SlopeFit:
    """Fit a power law through positive samples with a 95% interval."""
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    assert x.size == y.size and x.size >= 2

    res = stats.linregress(x, y)
    if x.size > 2:
        half = stats.t.ppf(0.975, x.size - 2) * res.stderr
    else:
        half = math.inf

    return SlopeFit(slope=float(res.slope), intercept=float(res.intercept),
                    stderr=float(res.stderr),
                    ci_low=float(res.slope - half),
                    ci_high=float(res.slope + half))


def strictly_decreasing(values: Iterable[float]) -> bool:
    vals = list(values)
    return all(b < a for a, b in zip(vals, vals[1:]))


def wavenumbers(n: int, period: float) -> np.ndarray:
    """Angular wavenumbers of an n-point periodic grid."""
    return 2 * np.pi * scipy.fft.fftfreq(n, d=period / n)


def spectral_dx(f: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
    """Derivative along a 2*pi-periodic axis, computed in Fourier space."""
    n = f.shape[axis]
    k = wavenumbers(n, 2 * np.pi)
    shape = [1] * f.ndim
    shape[axis] = n
    mult = (1j * k.reshape(shape))**order
    if order % 2 == 1 and n % 2 == 0:
        # The Nyquist mode has no well defined odd derivative.
        mult[tuple(slice(n // 2, n // 2 + 1) if a == axis else slice(None)
                   for a in range(f.ndim))] = 0

    spectrum = scipy.fft.fft(f, axis=axis, workers=fft_workers)
    df = scipy.fft.ifft(mult * spectrum, axis=axis, workers=fft_workers)
    if np.isrealobj(f):
        return df.real
    return df


def fd_dy(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order centered first derivative, one-sided at the ends."""
    return np.gradient(f, h, axis=axis, edge_order=2)


def fd_dyy(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order accurate second derivative, one-sided at the ends."""
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
    out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def to_builtin(obj: Any) -> Any:
    """Convert numpy scalars and arrays (recursively) to JSON-able values."""
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if hasattr(obj, "to_json"):
        return to_builtin(obj.to_json())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_builtin(dataclasses.asdict(obj))
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if hasattr(obj, "value") and hasattr(obj, "name"):
        # enum members
        return obj.value
    return obj


def write_json(path: str, kind: str, payload: Dict[str, Any]) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "kind": kind}
    doc.update(to_builtin(payload))
    with open(path, "w", encoding="ascii") as out:
        json.dump(doc, out, indent=2, sort_keys=True, allow_nan=True)
        print(file=out)
    return path


def write_csv(path: str, header: Sequence[str],
              columns: Sequence[np.ndarray]) -> str:
    cols = [np.ravel(np.asarray(c)) for c in columns]
    assert len(cols) == len(header)
    assert all(c.size == cols[0].size for c in cols)

    with open(path, "w", encoding="ascii", newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*(c.tolist() for c in cols)):
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])
    return path


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: str, files: Sequence[str],
                   extra: Optional[Dict[str, Any]] = None) -> str:
    entries = []
    for name in sorted(files):
        entries.append({
            "path": os.path.relpath(name, out_dir),
            "bytes": os.path.getsize(name),
            "sha256": file_sha256(name),
        })

    payload = {"files": entries}
    if extra:
        payload.update(extra)
    return write_json(os.path.join(out_dir, "manifest.json"), "manifest",
                      payload)
