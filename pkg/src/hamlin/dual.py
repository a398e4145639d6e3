"""Dual numbers a + b*eps with eps**2 = 0, for forward-mode differentiation.

Seeding an evaluation with (x_j, delta_ij) propagates the exact partial
derivative with respect to x_i alongside the value.  The compiled tape
evaluator implements the same arithmetic on flat stacks; this class is the
reference implementation and the public return type of dual evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EvalDomainError


@dataclass(frozen=True)
class Dual:
    value: float
    derivative: float = 0.0

    def _coerce(self, other) -> "Dual":
        if isinstance(other, Dual):
            return other
        return Dual(float(other), 0.0)

    def __add__(self, other) -> "Dual":
        o = self._coerce(other)
        return Dual(self.value + o.value, self.derivative + o.derivative)

    __radd__ = __add__

    def __sub__(self, other) -> "Dual":
        o = self._coerce(other)
        return Dual(self.value - o.value, self.derivative - o.derivative)

    def __rsub__(self, other) -> "Dual":
        return self._coerce(other).__sub__(self)

    def __mul__(self, other) -> "Dual":
        o = self._coerce(other)
        return Dual(
            self.value * o.value,
            self.value * o.derivative + self.derivative * o.value,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Dual":
        o = self._coerce(other)
        if o.value == 0.0:
            raise EvalDomainError("division by zero in dual arithmetic")
        return Dual(
            self.value / o.value,
            (self.derivative * o.value - self.value * o.derivative)
            / (o.value * o.value),
        )

    def __rtruediv__(self, other) -> "Dual":
        return self._coerce(other).__truediv__(self)

    def __neg__(self) -> "Dual":
        return Dual(-self.value, -self.derivative)

    def __pow__(self, exponent: float) -> "Dual":
        """Raise to a constant real exponent.

        Integer exponents use repeated multiplication so the result matches
        the tape evaluator bit for bit; fractional exponents require a
        strictly positive base.
        """
        e = float(exponent)
        if e.is_integer() and abs(e) <= 1024:
            k = int(e)
            if k == 0:
                return Dual(1.0, 0.0)
            acc = self
            for _ in range(abs(k) - 1):
                acc = acc * self
            if k < 0:
                return Dual(1.0, 0.0) / acc
            return acc
        if self.value <= 0.0:
            raise EvalDomainError("fractional power of a non-positive base")
        v = math.pow(self.value, e)
        return Dual(v, e * math.pow(self.value, e - 1.0) * self.derivative)
