"""Gradients, Jacobian determinants, divergence, and field algebra."""

import numpy as np
import pytest

from hamlin.calculus import (ScalarField, VectorField, divergence,
                             hadamard_bound, jacobian_determinant, product,
                             quotient, reciprocal, linear_combination)
from hamlin.errors import EvalDomainError
from hamlin.expr import parse
from hamlin.randexpr import random_polynomial


def _field(src, n=3, params=None):
    return ScalarField.from_expression(parse(src, n,
                                             frozenset(params or ())),
                                       dict(params or {}))


def test_gradient_oracle():
    f = _field("x1^2*x2 + x3")
    x = np.array([1.0, 2.0, 3.0])
    assert f.value(x) == 5.0
    assert np.allclose(f.gradient(x), [4.0, 1.0, 1.0], rtol=0, atol=0)


def test_partial_matches_gradient():
    f = _field("x1*x2/(2+x3^2)")
    x = np.array([0.3, -1.2, 0.8])
    g = f.gradient(x)
    for i in range(3):
        assert f.partial(x, i + 1) == g[i]


def test_callable_field_central_difference():
    f = ScalarField.from_callable(lambda x: float(x[0] ** 2 * x[1]), n=2)
    x = np.array([1.5, 2.0])
    g = f.gradient(x)
    assert g[0] == pytest.approx(2.0 * 1.5 * 2.0, rel=1e-7)
    assert g[1] == pytest.approx(1.5 ** 2, rel=1e-7)


def test_coordinate_and_constant_fields():
    e2 = ScalarField.coordinate(2, 3)
    x = np.array([5.0, 7.0, 9.0])
    assert e2.value(x) == 7.0
    assert np.array_equal(e2.gradient(x), [0.0, 1.0, 0.0])
    c = ScalarField.constant(-2.5, 3)
    assert c.value(x) == -2.5
    assert np.array_equal(c.gradient(x), [0.0, 0.0, 0.0])


def test_jacobian_determinant_alternating():
    f = _field("x1+2*x2")
    g = _field("x2*x3")
    h = _field("x1^2")
    x = np.array([1.1, 0.7, -0.4])
    d_fgh = jacobian_determinant((f, g, h), x)
    d_gfh = jacobian_determinant((g, f, h), x)
    assert d_fgh == pytest.approx(-d_gfh, rel=1e-14)
    # a repeated row kills the determinant exactly (bitwise equal rows)
    assert jacobian_determinant((f, f, h), x) == 0.0


def test_jacobian_determinant_multilinear(rng):
    f = random_polynomial(3, rng)
    g = random_polynomial(3, rng)
    h = random_polynomial(3, rng)
    ff = ScalarField.from_expression(f, {})
    gf = ScalarField.from_expression(g, {})
    hf = ScalarField.from_expression(h, {})
    x = rng.uniform(-1.5, 1.5, size=3)
    base = jacobian_determinant((ff, gf, hf), x)
    scaled = jacobian_determinant(
        (linear_combination([3.0], [ff]), gf, hf), x)
    assert scaled == pytest.approx(3.0 * base, rel=1e-12, abs=1e-14)
    # additivity in the first slot
    combo = jacobian_determinant(
        (linear_combination([1.0, 1.0], [ff, gf]), gf, hf), x)
    assert combo == pytest.approx(base, rel=1e-10, abs=1e-12)


def test_divergence_oracle():
    X = VectorField.from_expressions(
        [parse(s, 3) for s in ("x1*(x2+x3)", "x2*(-x1+x3)", "x3*(-x1-x2)")],
        {})
    x = np.array([1.0, 1.0, 2.0])
    # sum of diagonal partials: (x2+x3) + (-x1+x3) + (-x1-x2) = 2(x3-x1)
    assert divergence(X, x) == pytest.approx(2.0, rel=1e-15)
    x = np.array([0.4, -1.3, 0.9])
    assert divergence(X, x) == pytest.approx(2.0 * (0.9 - 0.4), rel=1e-13)


def test_divergence_additive(rng):
    def mk():
        comps = [random_polynomial(3, rng) for _ in range(3)]
        return VectorField(tuple(ScalarField.from_expression(c, {})
                                 for c in comps))

    A = mk()
    B = mk()
    S = A + B
    for _ in range(50):
        x = rng.uniform(-2.0, 2.0, size=3)
        lhs = divergence(S, x)
        rhs = divergence(A, x) + divergence(B, x)
        assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(lhs) + abs(rhs))


def test_dual_gradients_match_central_difference(rng):
    for _ in range(200):
        f = ScalarField.from_expression(random_polynomial(3, rng), {})
        x = rng.uniform(-2.0, 2.0, size=3)
        g = f.gradient(x)
        for i in range(3):
            h = 1e-6 * max(1.0, abs(x[i]))
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            fd = (f.value(xp) - f.value(xm)) / (2.0 * h)
            assert abs(fd - g[i]) <= 1e-6 * (1.0 + abs(g[i]))


def test_hadamard_bound_dominates():
    rows = np.array([[3.0, 4.0, 0.0], [1.0, 1.0, 1.0], [0.0, 2.0, 2.0]])
    assert hadamard_bound(rows) >= abs(np.linalg.det(rows))
    assert hadamard_bound(rows) == pytest.approx(
        5.0 * np.sqrt(3.0) * np.sqrt(8.0))


def test_field_algebra():
    f = _field("x1+x2", 2)
    g = _field("x1*x2", 2)
    x = np.array([2.0, 3.0])
    assert product(f, g).value(x) == 30.0
    assert quotient(f, g).value(x) == pytest.approx(5.0 / 6.0)
    assert reciprocal(g).value(x) == pytest.approx(1.0 / 6.0)
    with pytest.raises(EvalDomainError):
        reciprocal(g).value(np.array([0.0, 1.0]))
    # gradients flow through the algebra
    p = product(f, g)
    gp = p.gradient(x)
    # d/dx1 (x1+x2)(x1 x2) = x1 x2 + (x1+x2) x2
    assert gp[0] == pytest.approx(6.0 + 15.0)
    assert gp[1] == pytest.approx(6.0 + 10.0)


def test_quotient_of_callable_fields():
    f = ScalarField.from_callable(lambda x: float(x[0] + x[1]), n=2)
    g = ScalarField.from_callable(lambda x: float(x[0] * x[1]), n=2)
    q = quotient(f, g)
    assert q.value(np.array([2.0, 3.0])) == pytest.approx(5.0 / 6.0)
    with pytest.raises(EvalDomainError):
        q.value(np.array([0.0, 3.0]))


def test_divergence_requires_square():
    X = VectorField.from_expressions([parse("x1", 3), parse("x2", 3)], {})
    with pytest.raises(ValueError):
        divergence(X, np.array([1.0, 2.0, 3.0]))
