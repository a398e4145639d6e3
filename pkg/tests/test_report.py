"""17-significant-digit JSON serialization and atomic writes."""

import json
import math
import os

import numpy as np
import pytest

from hamlin.report import VerificationReport, dumps17, write_json


def test_floats_round_trip_exactly(rng):
    values = list(rng.uniform(-1e6, 1e6, size=200))
    values += [1e-300, 5e300, 2.0 ** -1074, math.pi, -0.0]
    for v in values:
        assert json.loads(dumps17({"v": float(v)}))["v"] == float(v)


def test_17g_format_used():
    s = dumps17({"v": 0.1})
    assert "0.10000000000000001" in s
    assert dumps17(1.0) == "1"
    assert dumps17(-2.5) == "-2.5"


def test_nonfinite_literals():
    s = dumps17({"a": float("nan"), "b": float("inf"), "c": float("-inf")})
    assert "NaN" in s and "Infinity" in s and "-Infinity" in s


def test_bool_before_int():
    assert dumps17(True) == "true"
    assert dumps17({"flag": False}) == '{"flag": false}'


def test_numpy_values():
    s = dumps17({"a": np.float64(0.5), "b": np.int64(3),
                 "c": np.array([1.0, 2.0])})
    d = json.loads(s)
    assert d == {"a": 0.5, "b": 3, "c": [1.0, 2.0]}


def test_indent_layout():
    s = dumps17({"a": [1, 2], "b": {"c": 3}}, indent=2)
    assert s.startswith("{\n  ")
    assert json.loads(s) == {"a": [1, 2], "b": {"c": 3}}


def test_non_string_keys_rejected():
    with pytest.raises(TypeError):
        dumps17({1: "x"})


def test_write_json_atomic(tmp_path):
    path = tmp_path / "out.json"
    write_json(str(path), {"x": 0.1})
    assert json.loads(path.read_text())["x"] == 0.1
    # no stray temp files left behind
    assert os.listdir(tmp_path) == ["out.json"]


def test_verification_report_dict():
    rep = VerificationReport(name="t", n_points=5, n_skipped=1,
                             max_residual=1e-10, mean_residual=5e-11,
                             tolerance=1e-8, passed=True, details={"k": 2})
    d = rep.to_dict()
    assert d["pass"] is True
    assert d["n_points"] == 5
    assert d["details"]["k"] == 2
