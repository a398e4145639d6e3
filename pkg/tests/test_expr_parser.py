"""Grammar, precedence, and printing of the expression language."""

import pytest

from hamlin.errors import ParseError
from hamlin.expr import (Bin, Const, Neg, Param, Pow, Var, parse, to_source)


def _ast(source, n=3, params=frozenset()):
    return parse(source, n, params).ast


def test_numbers_and_variables():
    assert _ast("2.5", 1) == Const(2.5)
    assert _ast("x2") == Var(2)
    assert _ast("1e-3", 1) == Const(1e-3)
    assert _ast(".5", 1) == Const(0.5)


def test_parameters_require_declaration():
    assert _ast("k*x1", params=frozenset({"k"})) == Bin("*", Param("k"), Var(1))
    with pytest.raises(ParseError):
        parse("k*x1", 3, frozenset())


def test_variable_index_bounds():
    with pytest.raises(ParseError):
        parse("x4", 3, frozenset())
    with pytest.raises(ParseError):
        parse("x0", 3, frozenset())
    assert _ast("x3") == Var(3)


def test_precedence_mul_over_add():
    assert _ast("x1+x2*x3") == Bin("+", Var(1), Bin("*", Var(2), Var(3)))
    assert _ast("(x1+x2)*x3") == Bin("*", Bin("+", Var(1), Var(2)), Var(3))


def test_left_associativity():
    assert _ast("x1-x2-x3") == Bin("-", Bin("-", Var(1), Var(2)), Var(3))
    assert _ast("x1/x2/x3") == Bin("/", Bin("/", Var(1), Var(2)), Var(3))


def test_power_binds_tighter_than_unary_minus():
    # -x1^2 is -(x1^2), the usual mathematical reading
    assert _ast("-x1^2") == Neg(Pow(Var(1), 2.0))
    assert _ast("(-x1)^2") == Pow(Neg(Var(1)), 2.0)


def test_power_right_associative_exponent_folds():
    # 2^3^2 = 2^(3^2) = 2^9; the exponent subtree must fold to a constant
    assert _ast("x1^3^2") == Pow(Var(1), 9.0)
    assert _ast("x1^(2+1)") == Pow(Var(1), 3.0)
    assert _ast("x1^-2") == Pow(Var(1), -2.0)


def test_nonconstant_exponent_rejected():
    with pytest.raises(ParseError):
        parse("x1^x2", 3, frozenset())
    with pytest.raises(ParseError):
        parse("2^x1", 3, frozenset())


def test_unary_minus_chains():
    assert _ast("--x1") == Neg(Neg(Var(1)))
    assert _ast("x1--x2") == Bin("-", Var(1), Neg(Var(2)))


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as info:
        parse("x1 + + x2", 3, frozenset())
    assert "position" in str(info.value)
    with pytest.raises(ParseError):
        parse("x1)", 3, frozenset())
    with pytest.raises(ParseError):
        parse("(x1", 3, frozenset())
    with pytest.raises(ParseError):
        parse("", 3, frozenset())
    with pytest.raises(ParseError):
        parse("x1 $ x2", 3, frozenset())


def test_print_round_trip_builtina():
    sources = [
        "x1*(x2+x3)",
        "-(x1^2*x3^2)/(x1+x2+x3)",
        "x2*(x1+x2+x3)/(x1*x3)",
        "1/2*(x1^2+x2^2+x3^2)",
        "(I2-I3)/(I2*I3)*x2*x3",
        "x1^-3",
        "-x1-x2",
        "x1-(x2-x3)",
        "x1/(x2*x3)",
        "2/x1^2",
    ]
    params = frozenset({"I1", "I2", "I3"})
    for src in sources:
        tree = parse(src, 3, params).ast
        printed = to_source(tree)
        again = parse(printed, 3, params).ast
        assert again == tree, f"{src!r} -> {printed!r}"


def test_print_round_trip_random(rng):
    from hamlin.randexpr import random_polynomial, random_rational
    for _ in range(200):
        n = int(rng.integers(2, 5))
        expr = (random_rational(n, rng) if rng.random() < 0.5
                else random_polynomial(n, rng))
        printed = to_source(expr.ast)
        assert parse(printed, n, frozenset()).ast == expr.ast


def test_whitespace_insensitive():
    assert _ast(" x1 + x2 ") == _ast("x1+x2")
    assert _ast("x1 * ( x2 + x3 )") == _ast("x1*(x2+x3)")
