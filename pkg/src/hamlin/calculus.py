"""Scalar and vector fields with exact or finite-difference derivatives.

Expression-backed fields differentiate exactly through the dual-number
tape; callable-backed fields (needed when a value is only computable, not
symbolic, e.g. a bracket of brackets) fall back to central differences.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import EvalDomainError
from .expr import Bin, Const, Expression, Neg, Var

__all__ = [
    "ScalarField",
    "VectorField",
    "jacobian_determinant",
    "divergence",
    "hadamard_bound",
    "product",
    "quotient",
    "reciprocal",
    "linear_combination",
]

# central-difference step coefficient: error ~ eps/h + h^2 -> h ~ cbrt(eps)
_FD_CBRT = float(np.finfo(np.float64).eps) ** (1.0 / 3.0)


class ScalarField:
    """A real-valued field on R^n.

    Construct via ``from_expression`` (exact partials through dual numbers)
    or ``from_callable`` (central differences, step fd_coeff*max(1,|x_i|)).
    """

    __slots__ = ("n", "expression", "params", "_pvec", "_fn", "fd_coeff")

    def __init__(self, n: int, expression: Expression | None = None,
                 params: Mapping[str, float] | None = None,
                 fn: Callable[[np.ndarray], float] | None = None,
                 fd_coeff: float = _FD_CBRT):
        if (expression is None) == (fn is None):
            raise ValueError("exactly one of expression/fn is required")
        self.n = int(n)
        self.expression = expression
        self.params = dict(params) if params else {}
        self._pvec = expression.bind(self.params) if expression is not None else None
        self._fn = fn
        self.fd_coeff = float(fd_coeff)

    # -- constructors ----------------------------------------------------

    @classmethod
    def from_expression(cls, expression: Expression,
                        params: Mapping[str, float] | None = None) -> "ScalarField":
        return cls(expression.n, expression=expression, params=params)

    @classmethod
    def from_callable(cls, fn: Callable[[np.ndarray], float], n: int,
                      fd_coeff: float = _FD_CBRT) -> "ScalarField":
        return cls(n, fn=fn, fd_coeff=fd_coeff)

    @classmethod
    def coordinate(cls, index: int, n: int) -> "ScalarField":
        """The field x_index (1-based)."""
        if index < 1 or index > n:
            raise ValueError(f"coordinate index {index} out of range 1..{n}")
        return cls.from_expression(Expression(Var(index), n))

    @classmethod
    def constant(cls, value: float, n: int) -> "ScalarField":
        v = float(value)
        ast = Neg(Const(-v)) if v < 0 else Const(v)
        return cls.from_expression(Expression(ast, n))

    # -- evaluation --------------------------------------------------------

    def _as_point(self, x) -> np.ndarray:
        x_arr = np.ascontiguousarray(x, dtype=np.float64)
        if x_arr.shape != (self.n,):
            raise ValueError(f"point has shape {x_arr.shape}, expected ({self.n},)")
        return x_arr

    def value(self, x) -> float:
        x_arr = self._as_point(x)
        if self.expression is not None:
            return float(self.expression.eval_raw(x_arr, self._pvec))
        return float(self._fn(x_arr))

    def partial(self, x, index: int) -> float:
        """Exact (expression) or central-difference partial d/dx_index, 1-based."""
        x_arr = self._as_point(x)
        if index < 1 or index > self.n:
            raise ValueError(f"axis {index} out of range 1..{self.n}")
        if self.expression is not None:
            _, d = self.expression.eval_dual_raw(x_arr, self._pvec, index - 1)
            return float(d)
        h = self.fd_coeff * max(1.0, abs(x_arr[index - 1]))
        xp = x_arr.copy()
        xm = x_arr.copy()
        xp[index - 1] += h
        xm[index - 1] -= h
        return (float(self._fn(xp)) - float(self._fn(xm))) / (2.0 * h)

    def gradient(self, x) -> np.ndarray:
        x_arr = self._as_point(x)
        g = np.empty(self.n, dtype=np.float64)
        if self.expression is not None:
            for i in range(self.n):
                _, g[i] = self.expression.eval_dual_raw(x_arr, self._pvec, i)
        else:
            for i in range(self.n):
                g[i] = self.partial(x_arr, i + 1)
        return g

    def __repr__(self):
        if self.expression is not None:
            return f"ScalarField({self.expression!r})"
        return f"ScalarField(<callable>, n={self.n})"


class VectorField:
    """A vector field as a tuple of component ScalarFields."""

    __slots__ = ("n", "components")

    def __init__(self, components: Sequence[ScalarField]):
        components = tuple(components)
        if not components:
            raise ValueError("vector field needs at least one component")
        n = components[0].n
        if any(c.n != n for c in components):
            raise ValueError("component dimensions disagree")
        self.n = n
        self.components = components

    @classmethod
    def from_expressions(cls, expressions: Sequence[Expression],
                         params: Mapping[str, float] | None = None) -> "VectorField":
        return cls([ScalarField.from_expression(e, params) for e in expressions])

    def value(self, x) -> np.ndarray:
        return np.array([c.value(x) for c in self.components], dtype=np.float64)

    def __add__(self, other: "VectorField") -> "VectorField":
        if not isinstance(other, VectorField) or other.n != self.n:
            return NotImplemented
        return VectorField([linear_combination([1.0, 1.0], [a, b])
                            for a, b in zip(self.components, other.components)])

    def __repr__(self):
        return f"VectorField(n={self.n}, m={len(self.components)})"


# ---------------------------------------------------------------------------
# Derived quantities


def jacobian_determinant(fields: Sequence[ScalarField], x) -> float:
    """det of the matrix whose rows are the gradients of the given fields.

    Requires len(fields) == n.  Computed by LU factorization with partial
    pivoting; rows that are bitwise identical give an exact 0.0.
    """
    fields = list(fields)
    n = fields[0].n
    if len(fields) != n:
        raise ValueError(f"need {n} fields for an n x n Jacobian, got {len(fields)}")
    rows = np.empty((n, n), dtype=np.float64)
    for k, f in enumerate(fields):
        rows[k] = f.gradient(x)
    return float(np.linalg.det(rows))


def divergence(field: VectorField, x) -> float:
    """sum_i dX_i/dx_i; requires a square field (m == n)."""
    if len(field.components) != field.n:
        raise ValueError("divergence needs as many components as dimensions")
    return float(sum(c.partial(x, i + 1) for i, c in enumerate(field.components)))


def hadamard_bound(rows: np.ndarray) -> float:
    """Product of row 2-norms: an upper bound on |det| used as a det scale."""
    rows = np.asarray(rows, dtype=np.float64)
    return float(np.prod(np.linalg.norm(rows, axis=1)))


# ---------------------------------------------------------------------------
# Field algebra.  When both operands are expression-backed the result is a
# new expression (so its derivatives stay exact); otherwise it degrades to a
# callable-backed field with finite-difference derivatives.


def _merge_params(a: ScalarField, b: ScalarField) -> dict:
    merged = dict(a.params)
    for k, v in b.params.items():
        if k in merged and merged[k] != v:
            raise ValueError(f"parameter {k!r} bound inconsistently")
        merged[k] = v
    return merged


def _combine(op: str, a: ScalarField, b: ScalarField) -> ScalarField:
    if a.n != b.n:
        raise ValueError("field dimensions disagree")
    if a.expression is not None and b.expression is not None:
        params = _merge_params(a, b)
        ast = Bin(op, a.expression.ast, b.expression.ast)
        names = frozenset(params) | a.expression.param_names | b.expression.param_names
        return ScalarField.from_expression(Expression(ast, a.n, names), params)
    if op == "*":
        fn = lambda x: a.value(x) * b.value(x)
    elif op == "/":
        def fn(x, _a=a, _b=b):
            d = _b.value(x)
            if d == 0.0:
                raise EvalDomainError("division by zero", subexpression="<quotient>")
            return _a.value(x) / d
    elif op == "+":
        fn = lambda x: a.value(x) + b.value(x)
    else:
        fn = lambda x: a.value(x) - b.value(x)
    return ScalarField.from_callable(fn, a.n,
                                     fd_coeff=max(a.fd_coeff, b.fd_coeff))


def product(a: ScalarField, b: ScalarField) -> ScalarField:
    return _combine("*", a, b)


def quotient(a: ScalarField, b: ScalarField) -> ScalarField:
    return _combine("/", a, b)


def reciprocal(a: ScalarField) -> ScalarField:
    return quotient(ScalarField.constant(1.0, a.n), a)


def linear_combination(coeffs: Sequence[float], fields: Sequence[ScalarField]) -> ScalarField:
    """sum_k coeffs[k] * fields[k]."""
    if len(coeffs) != len(fields) or not fields:
        raise ValueError("need matching, nonempty coefficients and fields")
    acc = product(ScalarField.constant(coeffs[0], fields[0].n), fields[0])
    for c, f in zip(coeffs[1:], fields[1:]):
        acc = _combine("+", acc, product(ScalarField.constant(c, f.n), f))
    return acc
