"""System documents: loading, validation, builtins, sampling, rescaling.

A system document is a JSON object::

    {
      "name": "...",
      "n": 3,
      "parameters": {"I1": 1.0},       # optional, default {}
      "equations":  ["...", ...],      # exactly n expressions
      "casimirs":   ["...", ...],      # exactly n-2 expressions
      "hamiltonian": "...",
      "nu": "...",
      "mu": "..."                      # optional
    }

Expressions use the coordinates x1..xn plus the declared parameter names.
"""

from __future__ import annotations

import hashlib
import json
import os
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping

import numpy as np

from .calculus import ScalarField, VectorField
from .errors import ParseError, SystemDocumentError
from .expr import Bin, Expression, parse, to_source
from .report import dumps17

__all__ = [
    "IntegrableSystem",
    "SampleBox",
    "load_system",
    "system_document",
    "system_hash",
    "sample_points",
    "rescaled_system",
    "effective_system",
    "nu_is_constant",
    "builtin_lotka_volterra",
    "builtin_euler",
    "BUILTINS",
]


@dataclass(frozen=True)
class IntegrableSystem:
    """An n-dimensional system with n-2 conserved quantities plus an energy.

    ``equations`` are the components of the vector field X, ``casimirs`` the
    distinguished conserved quantities C_1..C_{n-2}, ``hamiltonian`` the
    final conserved quantity H, ``nu`` the bracket scaling function, and
    ``mu`` an optional time-rescaling factor (used when nu is constant).
    """

    name: str
    n: int
    parameters: dict
    equations: tuple
    casimirs: tuple
    hamiltonian: Expression
    nu: Expression
    mu: Expression | None = None

    def __post_init__(self):
        if self.n < 3:
            raise SystemDocumentError("n must be at least 3", path="n")
        if len(self.equations) != self.n:
            raise SystemDocumentError(
                f"expected {self.n} equations, got {len(self.equations)}",
                path="equations")
        if len(self.casimirs) != self.n - 2:
            raise SystemDocumentError(
                f"expected {self.n - 2} casimirs, got {len(self.casimirs)}",
                path="casimirs")

    @cached_property
    def vector_field(self) -> VectorField:
        return VectorField.from_expressions(self.equations, self.parameters)

    @cached_property
    def casimir_fields(self) -> tuple:
        return tuple(ScalarField.from_expression(c, self.parameters)
                     for c in self.casimirs)

    @cached_property
    def hamiltonian_field(self) -> ScalarField:
        return ScalarField.from_expression(self.hamiltonian, self.parameters)

    @cached_property
    def nu_field(self) -> ScalarField:
        return ScalarField.from_expression(self.nu, self.parameters)

    @cached_property
    def mu_field(self) -> ScalarField | None:
        if self.mu is None:
            return None
        return ScalarField.from_expression(self.mu, self.parameters)

    @cached_property
    def conserved_fields(self) -> tuple:
        """C_1, ..., C_{n-2}, H in chart order."""
        return self.casimir_fields + (self.hamiltonian_field,)


# ---------------------------------------------------------------------------
# Document loading and validation


def _expect(doc: dict, key: str, kind, path: str = ""):
    where = f"{path}.{key}" if path else key
    if key not in doc:
        raise SystemDocumentError("missing required field", path=where)
    value = doc[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SystemDocumentError("expected a number", path=where)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SystemDocumentError("expected an integer", path=where)
        return value
    if not isinstance(value, kind):
        raise SystemDocumentError(f"expected {kind.__name__}", path=where)
    return value


def _parse_field(source, n: int, names, path: str) -> Expression:
    if not isinstance(source, str):
        raise SystemDocumentError("expected an expression string", path=path)
    try:
        return parse(source, n, names)
    except ParseError as exc:
        raise SystemDocumentError(
            f"bad expression: {exc.message} (column {exc.position})",
            path=path) from exc


_KNOWN_KEYS = {"name", "n", "parameters", "equations", "casimirs",
               "hamiltonian", "nu", "mu"}


def load_system(source) -> IntegrableSystem:
    """Build a system from a document dict, JSON text path, or file object."""
    if isinstance(source, (str, bytes, os.PathLike)):
        try:
            with open(source) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise SystemDocumentError(f"cannot read file: {exc}", path="") from exc
        except json.JSONDecodeError as exc:
            raise SystemDocumentError(f"invalid JSON: {exc}", path="") from exc
    elif isinstance(source, dict):
        doc = source
    else:
        try:
            doc = json.load(source)
        except json.JSONDecodeError as exc:
            raise SystemDocumentError(f"invalid JSON: {exc}", path="") from exc

    if not isinstance(doc, dict):
        raise SystemDocumentError("document must be a JSON object", path="")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise SystemDocumentError(
            f"unknown field(s): {', '.join(sorted(unknown))}", path="")

    name = _expect(doc, "name", str)
    if not name:
        raise SystemDocumentError("name must be nonempty", path="name")
    n = _expect(doc, "n", int)
    if n < 3:
        raise SystemDocumentError("n must be at least 3", path="n")

    parameters: dict = {}
    if "parameters" in doc:
        raw = _expect(doc, "parameters", dict)
        for key, value in raw.items():
            if not isinstance(key, str) or not key:
                raise SystemDocumentError("parameter names must be strings",
                                          path="parameters")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise SystemDocumentError("expected a number",
                                          path=f"parameters.{key}")
            if not np.isfinite(value):
                raise SystemDocumentError("parameter must be finite",
                                          path=f"parameters.{key}")
            parameters[key] = float(value)
    names = frozenset(parameters)

    equations_raw = _expect(doc, "equations", list)
    if len(equations_raw) != n:
        raise SystemDocumentError(
            f"expected {n} equations, got {len(equations_raw)}",
            path="equations")
    equations = tuple(_parse_field(src, n, names, f"equations[{i}]")
                      for i, src in enumerate(equations_raw))

    casimirs_raw = _expect(doc, "casimirs", list)
    if len(casimirs_raw) != n - 2:
        raise SystemDocumentError(
            f"expected {n - 2} casimirs, got {len(casimirs_raw)}",
            path="casimirs")
    casimirs = tuple(_parse_field(src, n, names, f"casimirs[{i}]")
                     for i, src in enumerate(casimirs_raw))

    for required in ("hamiltonian", "nu"):
        if required not in doc:
            raise SystemDocumentError("missing required field", path=required)
    hamiltonian = _parse_field(doc["hamiltonian"], n, names, "hamiltonian")
    nu = _parse_field(doc["nu"], n, names, "nu")
    mu = None
    if doc.get("mu") is not None:
        mu = _parse_field(doc["mu"], n, names, "mu")

    return IntegrableSystem(name=name, n=n, parameters=parameters,
                            equations=equations, casimirs=casimirs,
                            hamiltonian=hamiltonian, nu=nu, mu=mu)


def system_document(system: IntegrableSystem) -> dict:
    """Canonical document for a system: expressions re-printed from the AST."""
    doc = {
        "name": system.name,
        "n": system.n,
        "parameters": {k: float(v) for k, v in sorted(system.parameters.items())},
        "equations": [to_source(e) for e in system.equations],
        "casimirs": [to_source(c) for c in system.casimirs],
        "hamiltonian": to_source(system.hamiltonian),
        "nu": to_source(system.nu),
    }
    if system.mu is not None:
        doc["mu"] = to_source(system.mu)
    return doc


def system_hash(system: IntegrableSystem) -> str:
    """sha256 over the canonical document; stable across reformatting."""
    text = dumps17(system_document(system))
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Sampling


@dataclass(frozen=True)
class SampleBox:
    """An axis-aligned box with a deterministic uniform sampler."""

    bounds: tuple  # ((lo, hi), ...) one pair per axis
    count: int
    seed: int = 42

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be positive")
        for lo, hi in self.bounds:
            if not (lo < hi):
                raise ValueError(f"empty box axis [{lo}, {hi}]")


def sample_points(box: SampleBox,
                  predicate: Callable[[np.ndarray], bool] | None = None):
    """Draw box.count uniform points, keep those passing the predicate.

    Returns (points, n_rejected).  A predicate that raises an evaluation
    error counts as a rejection.  The draw is fully determined by the seed;
    filtering never draws replacements, so fewer than count points may
    return.
    """
    from .errors import EvalDomainError

    rng = np.random.default_rng(box.seed)
    n = len(box.bounds)
    lows = np.array([b[0] for b in box.bounds], dtype=np.float64)
    highs = np.array([b[1] for b in box.bounds], dtype=np.float64)
    raw = rng.uniform(lows, highs, size=(box.count, n))
    if predicate is None:
        return raw, 0
    kept = []
    rejected = 0
    for row in raw:
        try:
            ok = bool(predicate(row))
        except EvalDomainError:
            ok = False
        if ok:
            kept.append(row)
        else:
            rejected += 1
    points = np.array(kept, dtype=np.float64) if kept else np.empty((0, n))
    return points, rejected


# ---------------------------------------------------------------------------
# Rescaling (used when nu is constant to produce a nonvanishing divergence)


def rescaled_system(system: IntegrableSystem) -> IntegrableSystem:
    """The system with vector field mu*X and scaling nu*mu.

    Conserved quantities are unchanged (mu rescales time, not the flow
    lines).  The result carries no mu of its own.
    """
    if system.mu is None:
        raise SystemDocumentError("system has no mu to rescale by", path="mu")
    names = frozenset(system.parameters)
    equations = tuple(
        Expression(Bin("*", system.mu.ast, eq.ast), system.n, names)
        for eq in system.equations)
    nu = Expression(Bin("*", system.nu.ast, system.mu.ast), system.n, names)
    return IntegrableSystem(
        name=f"{system.name}-rescaled",
        n=system.n,
        parameters=dict(system.parameters),
        equations=equations,
        casimirs=system.casimirs,
        hamiltonian=system.hamiltonian,
        nu=nu,
        mu=None,
    )


def effective_system(system: IntegrableSystem) -> IntegrableSystem:
    """The system actually integrated: rescaled when a mu is declared."""
    return rescaled_system(system) if system.mu is not None else system


def _has_var(node) -> bool:
    from .expr import Bin as B, Neg, Pow, Var
    if isinstance(node, Var):
        return True
    if isinstance(node, Neg):
        return _has_var(node.child)
    if isinstance(node, B):
        return _has_var(node.left) or _has_var(node.right)
    if isinstance(node, Pow):
        return _has_var(node.base)
    return False


def nu_is_constant(system: IntegrableSystem, seed: int = 7) -> bool:
    """True when nu does not depend on the coordinates.

    Structurally constant expressions qualify immediately; otherwise nu is
    evaluated on a seeded 64-point sample and must agree to within
    1e-12*(1+|value|) at every evaluable point (at least one required).
    """
    if not _has_var(system.nu.ast):
        return True
    from .errors import EvalDomainError
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(64, system.n))
    values = []
    for row in pts:
        try:
            values.append(system.nu_field.value(row))
        except EvalDomainError:
            continue
    if not values:
        return False
    v0 = values[0]
    return all(abs(v - v0) <= 1e-12 * (1.0 + abs(v0)) for v in values)


# ---------------------------------------------------------------------------
# Builtins


def builtin_lotka_volterra() -> IntegrableSystem:
    """Three-species cyclic Lotka-Volterra system.

    X = (x1(x2+x3), x2(-x1+x3), x3(-x1-x2)) with conserved quantities
    C = x2(x1+x2+x3)/(x1 x3) and H = x1+x2+x3, realized with
    nu = -x1^2 x3^2/(x1+x2+x3).
    """
    return load_system({
        "name": "lotka-volterra",
        "n": 3,
        "equations": [
            "x1*(x2+x3)",
            "x2*(-x1+x3)",
            "x3*(-x1-x2)",
        ],
        "casimirs": ["x2*(x1+x2+x3)/(x1*x3)"],
        "hamiltonian": "x1+x2+x3",
        "nu": "-(x1^2*x3^2)/(x1+x2+x3)",
    })


def builtin_euler(I1: float = 1.0, I2: float = 2.0, I3: float = 3.0) -> IntegrableSystem:
    """Free rigid body in body angular momentum coordinates.

    C = |x|^2/2, H is the kinetic energy, nu = -1 (constant), and mu = x1
    is the declared time-rescaling factor.  I2 == I3 makes that rescaling
    useless (div(mu X) vanishes identically), hence the warning.
    """
    for label, value in (("I1", I1), ("I2", I2), ("I3", I3)):
        if value == 0:
            raise ValueError(f"inertia {label} must be nonzero")
    if I2 == I3:
        warnings.warn("I2 == I3: div(mu*X) with mu=x1 vanishes identically, "
                      "so the declared rescaling is inadmissible",
                      stacklevel=2)
    return load_system({
        "name": "euler-top",
        "n": 3,
        "parameters": {"I1": float(I1), "I2": float(I2), "I3": float(I3)},
        "equations": [
            "(I2-I3)/(I2*I3)*x2*x3",
            "(I3-I1)/(I1*I3)*x1*x3",
            "(I1-I2)/(I1*I2)*x1*x2",
        ],
        "casimirs": ["1/2*(x1^2+x2^2+x3^2)"],
        "hamiltonian": "1/2*(x1^2/I1+x2^2/I2+x3^2/I3)",
        "nu": "-1",
        "mu": "x1",
    })


BUILTINS: Mapping[str, Callable[..., IntegrableSystem]] = {
    "lotka-volterra": builtin_lotka_volterra,
    "euler-top": builtin_euler,
}
