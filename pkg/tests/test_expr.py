from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from errors import ExprSyntaxError, UnknownVariableError
from symexpr import Expr, expr_diff, expr_parse, expr_substitute, expr_to_string

XYZ = ("x", "y", "z")


def test_parse_canonical_form():
    e = expr_parse("x*y - y*x + 2*x^2/4", XYZ)
    assert e == expr_parse("x^2/2", XYZ)
    assert e.terms == {(2, 0, 0): Fraction(1, 2)}


def test_parse_constant_and_zero():
    assert expr_parse("0", XYZ).is_zero()
    assert expr_parse("-3/4", XYZ) == Fraction(-3, 4)
    assert expr_parse("(1 + 1)^3", XYZ).constant_term() == 8


def test_to_string_parses_back():
    for text in ("x^2*y - 1/3", "-y/2", "x*z + 2*y^3 - 7", "0"):
        e = expr_parse(text, XYZ)
        assert expr_parse(expr_to_string(e), XYZ) == e


@pytest.mark.parametrize("text", ["x/y", "x +", "(x", "x^y", "x^1.5", "1/0", "x $ y"])
def test_syntax_errors(text):
    with pytest.raises(ExprSyntaxError):
        expr_parse(text, XYZ)


def test_unknown_variable_reports_position():
    with pytest.raises(UnknownVariableError) as info:
        expr_parse("x + w", XYZ)
    assert info.value.name == "w"
    assert info.value.position == 4


def test_syntax_error_position_is_zero_based():
    with pytest.raises(ExprSyntaxError) as info:
        expr_parse("x $ y", XYZ)
    assert info.value.position == 2
    assert "x $ y"[info.value.position] == "$"


def test_diff_exact():
    e = expr_parse("x^2*y/2 - z", XYZ)
    assert expr_diff(e, 0) == expr_parse("x*y", XYZ)
    assert expr_diff(e, 1) == expr_parse("x^2/2", XYZ)
    assert expr_diff(e, 2) == -1


def test_substitute_composes():
    e = expr_parse("x*y", XYZ)
    s = ("s",)
    curve = [expr_parse("s", s), expr_parse("s^2 + 1", s), expr_parse("0", s)]
    assert expr_substitute(e, curve) == expr_parse("s^3 + s", s)


def test_evaluate_exact_and_float():
    e = expr_parse("x^2 - y/3", XYZ)
    assert e.evaluate((Fraction(1, 2), Fraction(1), 0)) == Fraction(-1, 12)
    assert e.evaluate((0.5, 1.0, 0.0)) == pytest.approx(-1 / 12)


small = st.integers(-5, 5)


@given(small, small, small, small)
def test_product_rule(a, b, c, d):
    f = Expr(XYZ, {(1, 0, 0): a, (0, 2, 0): b})
    g = Expr(XYZ, {(1, 1, 0): c, (0, 0, 1): d})
    for i in range(3):
        assert (f * g).diff(i) == f.diff(i) * g + f * g.diff(i)
