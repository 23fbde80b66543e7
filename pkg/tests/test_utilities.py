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

from dataclasses import dataclass
import enum
import hashlib
import json
import logging
import math
import os
import threading

import numpy as np
from numpy.testing import assert_allclose
import pytest

import utilities


@pytest.fixture
def restore_logging():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def test_logging_config(restore_logging):
    utilities.logging_config(logging.INFO)
    root = logging.getLogger()
    assert root.level == logging.INFO
    assert len(root.handlers) == 2
    levels = sorted(h.level for h in root.handlers)
    assert levels == [logging.DEBUG, logging.WARNING]


def test_call_every():
    called = threading.Event()
    with utilities.CallEvery(0.01, called.set) as c:
        assert called.wait(5.0)
    assert not c.running


def test_fit_power_law():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    fit = utilities.fit_power_law(x, 3 * x**-0.5)
    assert fit.slope == pytest.approx(-0.5)
    assert fit.intercept == pytest.approx(math.log(3))
    assert fit.within(-0.5, 1e-9)
    assert fit.ci_low <= fit.slope <= fit.ci_high
    assert fit.to_json()["ci95"] == [fit.ci_low, fit.ci_high]

    # No interval from two points.
    two = utilities.fit_power_law([1.0, 10.0], [1.0, 100.0])
    assert two.slope == pytest.approx(2.0)
    assert two.ci_high == math.inf


def test_strictly_decreasing():
    assert utilities.strictly_decreasing([0.1, 0.05, 0.025])
    assert not utilities.strictly_decreasing([0.1, 0.1, 0.05])
    assert utilities.strictly_decreasing([])


def test_wavenumbers():
    assert_allclose(utilities.wavenumbers(4, 2 * math.pi), [0, 1, -2, -1])
    assert_allclose(utilities.wavenumbers(4, 4 * math.pi),
                    [0, 0.5, -1, -0.5])


def test_spectral_dx():
    x = 2 * np.pi * np.arange(16) / 16
    f = np.stack([np.sin(3 * x), np.cos(x)], axis=1)
    assert_allclose(utilities.spectral_dx(f, axis=0),
                    np.stack([3 * np.cos(3 * x), -np.sin(x)], axis=1),
                    atol=1e-12)
    assert_allclose(utilities.spectral_dx(f, axis=0, order=2),
                    np.stack([-9 * np.sin(3 * x), -np.cos(x)], axis=1),
                    atol=1e-11)
    # The Nyquist mode is dropped by odd derivatives.
    assert_allclose(utilities.spectral_dx(np.cos(8 * x), axis=0), 0,
                    atol=1e-12)


def test_finite_differences():
    y = np.linspace(-1.0, 1.0, 11)
    h = y[1] - y[0]
    f = np.stack([y**2, y**3])
    assert_allclose(utilities.fd_dy(f[:1], h, axis=1), [2 * y], atol=1e-12)
    # Exact for cubics, ends included.
    assert_allclose(utilities.fd_dyy(f, h, axis=1),
                    np.stack([np.full_like(y, 2.0), 6 * y]), atol=1e-10)


class Color(enum.Enum):
    RED = "red"


@dataclass(frozen=True)
class Point:
    x: float
    y: float


def test_to_builtin():
    doc = utilities.to_builtin({
        1: np.float64(0.5),
        "a": np.arange(3),
        "flag": np.bool_(True),
        "n": np.int32(4),
        "pair": (Point(1.0, 2.0), Color.RED),
        "fit": utilities.fit_power_law([1.0, 2.0], [1.0, 2.0]),
    })
    assert doc["1"] == 0.5 and type(doc["1"]) is float
    assert doc["a"] == [0, 1, 2]
    assert doc["flag"] is True
    assert doc["n"] == 4 and type(doc["n"]) is int
    assert doc["pair"] == [{"x": 1.0, "y": 2.0}, "red"]
    assert doc["fit"]["slope"] == pytest.approx(1.0)
    json.dumps(doc)


def test_write_json(tmp_path):
    path = utilities.write_json(str(tmp_path / "out.json"), "test",
                                {"value": np.float64(math.nan),
                                 "items": np.ones(2)})
    with open(path, "r", encoding="ascii") as f:
        doc = json.load(f)
    assert doc["schema_version"] == utilities.SCHEMA_VERSION
    assert doc["kind"] == "test"
    assert math.isnan(doc["value"])
    assert doc["items"] == [1.0, 1.0]


def test_write_csv(tmp_path):
    path = utilities.write_csv(str(tmp_path / "out.csv"), ("i", "v"),
                               (np.arange(3), np.array([[0.1, 0.2, 1 / 3]])))
    with open(path, "r", encoding="ascii") as f:
        lines = f.read().splitlines()
    assert lines[0] == "i,v"
    assert lines[1:] == ["0,0.1", "1,0.2", f"2,{1 / 3!r}"]


def test_write_manifest(tmp_path):
    a = utilities.write_json(str(tmp_path / "a.json"), "a", {})
    b = utilities.write_csv(str(tmp_path / "b.csv"), ("x",), (np.ones(2),))
    path = utilities.write_manifest(str(tmp_path), [b, a], {"exit_code": 0})
    assert os.path.basename(path) == "manifest.json"

    with open(path, "r", encoding="ascii") as f:
        doc = json.load(f)
    assert doc["exit_code"] == 0
    assert [e["path"] for e in doc["files"]] == ["a.json", "b.csv"]
    with open(b, "rb") as f:
        data = f.read()
    entry = doc["files"][1]
    assert entry["bytes"] == len(data)
    assert entry["sha256"] == hashlib.sha256(data).hexdigest()
