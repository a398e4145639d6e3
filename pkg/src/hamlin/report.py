"""Verification report records and deterministic JSON serialization.

All floats written by this package go through ``dumps17`` so that reports,
certificates and system documents are reproducible byte for byte: floats
are rendered with 17 significant digits, which round-trips float64.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = ["VerificationReport", "dumps17", "write_json"]


def _render(value: Any, out: list, indent: int, level: int) -> None:
    pad = "" if indent == 0 else "\n" + " " * (indent * (level + 1))
    close_pad = "" if indent == 0 else "\n" + " " * (indent * level)
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, str):
        out.append(json.dumps(value))
    elif isinstance(value, (int, np.integer)):
        out.append(str(int(value)))
    elif isinstance(value, (float, np.floating)):
        v = float(value)
        if v != v:
            out.append("NaN")
        elif v == float("inf"):
            out.append("Infinity")
        elif v == float("-inf"):
            out.append("-Infinity")
        else:
            out.append(format(v, ".17g"))
    elif isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{")
        first = True
        for k, v in value.items():
            if not isinstance(k, str):
                raise TypeError(f"JSON object keys must be strings, got {k!r}")
            if not first:
                out.append(",")
                if indent == 0:
                    out.append(" ")
            first = False
            out.append(pad)
            out.append(json.dumps(k))
            out.append(": ")
            _render(v, out, indent, level + 1)
        out.append(close_pad)
        out.append("}")
    elif isinstance(value, (list, tuple, np.ndarray)):
        if isinstance(value, np.ndarray):
            value = value.tolist()
        if not value:
            out.append("[]")
            return
        out.append("[")
        for i, v in enumerate(value):
            if i:
                out.append(",")
                if indent == 0:
                    out.append(" ")
            out.append(pad)
            _render(v, out, indent, level + 1)
        out.append(close_pad)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps17(value: Any, indent: int = 0) -> str:
    """Serialize to JSON with floats at 17 significant digits."""
    out: list = []
    _render(value, out, indent, 0)
    return "".join(out)


def write_json(path: str, value: Any, indent: int = 2) -> None:
    """Atomically write a JSON document (tmp file + rename)."""
    text = dumps17(value, indent=indent)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
        fh.write("\n")
    os.replace(tmp, path)


@dataclass
class VerificationReport:
    """Outcome of a sampled identity check.

    n_points counts evaluated samples; n_skipped counts samples excluded
    (outside the required domain or not evaluable).  ``passed`` means the
    max residual stayed at or below ``tolerance`` and at least one sample
    was evaluated.
    """

    name: str
    n_points: int
    n_skipped: int
    max_residual: float
    mean_residual: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {
            "name": self.name,
            "n_points": self.n_points,
            "n_skipped": self.n_skipped,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }
        if self.details:
            doc["details"] = self.details
        return doc
