"""Evaluation and forward-mode derivatives of compiled expressions."""

import numpy as np
import pytest

from hamlin.errors import (EvalDomainError, ParseError,
                           UnboundParameterError)
from hamlin.expr import Expression, parse
from hamlin.randexpr import random_polynomial, random_rational


def test_arithmetic_oracles():
    e = parse("x1*(x2+x3)", 3, frozenset())
    assert e.evaluate(np.array([1.0, 1.0, 2.0])) == 3.0
    e = parse("-(x1^2*x3^2)/(x1+x2+x3)", 3, frozenset())
    assert e.evaluate(np.array([1.0, 1.0, 2.0])) == -1.0
    e = parse("x2*(x1+x2+x3)/(x1*x3)", 3, frozenset())
    assert e.evaluate(np.array([1.0, 1.0, 2.0])) == 2.0


def test_parameters_bind_and_missing_raise():
    e = parse("(I2-I3)/(I2*I3)*x2*x3", 3, frozenset({"I2", "I3"}))
    v = e.evaluate(np.array([9.0, 1.0, 1.0]), {"I2": 2.0, "I3": 3.0})
    assert v == pytest.approx(-1.0 / 6.0)
    with pytest.raises(UnboundParameterError):
        e.evaluate(np.array([9.0, 1.0, 1.0]), {"I2": 2.0})


def test_unknown_parameter_rejected_at_parse():
    with pytest.raises(ParseError):
        parse("a*x1", 3, frozenset({"b"}))


def test_dual_derivative_oracle():
    e = parse("-(x1^2*x3^2)/(x1+x2+x3)", 3, frozenset())
    d = e.eval_dual(np.array([1.0, 1.0, 2.0]), 1)
    # d(nu)/dx1 at (1,1,2): -(2*x1*x3^2*(x1+x2+x3) - x1^2*x3^2)/S^2
    assert d.value == -1.0
    assert d.derivative == pytest.approx(-1.75)


def test_dual_vs_central_difference(rng):
    # the random families are pole-free (denominators are 2 + p^2), so
    # every draw must agree with the finite difference
    for _ in range(500):
        n = int(rng.integers(2, 5))
        e = (random_rational(n, rng) if rng.random() < 0.5
             else random_polynomial(n, rng))
        x = rng.uniform(-2.0, 2.0, size=n)
        axis = int(rng.integers(1, n + 1))
        d = e.eval_dual(x, axis)
        h = 1e-6 * max(1.0, abs(x[axis - 1]))
        xp = x.copy()
        xm = x.copy()
        xp[axis - 1] += h
        xm[axis - 1] -= h
        fd = (e.evaluate(xp) - e.evaluate(xm)) / (2.0 * h)
        scale = 1.0 + abs(d.derivative)
        assert abs(fd - d.derivative) <= 1e-6 * scale


def test_evaluation_is_pure():
    e = parse("x1/x2 + x1^3", 2, frozenset())
    x = np.array([1.5, 0.5])
    first = e.evaluate(x)
    for _ in range(10):
        assert e.evaluate(x) == first
    with pytest.raises(EvalDomainError):
        e.evaluate(np.array([1.0, 0.0]))
    # a failed evaluation must not poison later ones
    assert e.evaluate(x) == first


def test_domain_error_names_subexpression():
    e = parse("x1 + 1/(x2-x2)", 2, frozenset())
    with pytest.raises(EvalDomainError) as info:
        e.evaluate(np.array([1.0, 2.0]))
    assert "division by zero" in str(info.value)
    assert info.value.subexpression is not None
    assert "/" in info.value.subexpression


def test_fractional_power_domain():
    e = parse("x1^0.5", 1, frozenset())
    assert e.evaluate(np.array([4.0])) == 2.0
    with pytest.raises(EvalDomainError):
        e.evaluate(np.array([-4.0]))
    e = parse("x1^-2", 1, frozenset())
    with pytest.raises(EvalDomainError):
        e.evaluate(np.array([0.0]))


def test_integer_power_matches_multiplication_loop():
    e_pow = parse("x1^5", 1, frozenset())
    e_mul = parse("x1*x1*x1*x1*x1", 1, frozenset())
    for v in (0.3, -1.7, 2.0):
        x = np.array([v])
        assert e_pow.evaluate(x) == e_mul.evaluate(x)


def test_gradient_seed_axis_out_of_range():
    e = parse("x1+x2", 2, frozenset())
    with pytest.raises(ValueError):
        e.eval_dual(np.array([1.0, 2.0]), 3)
    with pytest.raises(ValueError):
        e.eval_dual(np.array([1.0, 2.0]), 0)


def test_wrong_state_length():
    e = parse("x1+x2+x3", 3, frozenset())
    with pytest.raises(ValueError):
        e.evaluate(np.array([1.0, 2.0]))
