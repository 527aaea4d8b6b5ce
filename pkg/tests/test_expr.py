import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from connlab.expr import (ExprDomainError, ExprError, ExprSyntaxError, differentiate,
                          evaluate, parse, to_string)


def test_parse_two_variables():
    e = parse("x1*x2 + sin(x1)", 2)
    assert evaluate(e, [1.0, 2.0]) == pytest.approx(2 + math.sin(1))


def test_variable_index_exceeds_dim():
    with pytest.raises(ExprError):
        parse("x3", 2)


def test_rational_at_origin():
    assert evaluate(parse("1/(1+x1^2)", 1), [0.0]) == 1.0


def test_square():
    assert evaluate(parse("x1^2", 1), [3.0]) == 9.0


def test_log_domain_error():
    with pytest.raises(ExprDomainError):
        evaluate(parse("log(x1)", 1), [0.0])


def test_sqrt_and_division_domain_errors():
    with pytest.raises(ExprDomainError):
        evaluate(parse("sqrt(x1)", 1), [-1.0])
    with pytest.raises(ExprDomainError):
        evaluate(parse("1/x1", 1), [0.0])


def test_sin_exp():
    assert evaluate(parse("sin(x1)*exp(x2)", 2), [0.0, 5.0]) == 0.0


def test_derivatives():
    assert to_string(differentiate(parse("x1*x2", 2), 0)) == "x2"
    assert evaluate(differentiate(parse("sin(x1)", 1), 0), [0.0]) == 1.0
    d = differentiate(parse("1/(1+x1^2)", 2), 1)
    for x in ([0.0, 0.0], [1.5, -2.0]):
        assert evaluate(d, x) == 0.0


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("x1 + * x2", 2)
    assert exc.value.offset == 5


def test_unknown_identifier_and_fractional_power():
    with pytest.raises(ExprError):
        parse("foo(x1)", 1)
    with pytest.raises(ExprError):
        parse("x1^0.5", 1)


def test_negative_power():
    assert evaluate(parse("x1^-2", 1), [2.0]) == 0.25


# random expression trees ---------------------------------------------------

_leaf = st.one_of(st.sampled_from(["x1", "x2", "x3"]),
                  st.floats(-3, 3, allow_nan=False).map(lambda v: f"({v!r})"))


def _combine(children):
    binop = st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(
        lambda t: f"({t[0]} {t[1]} {t[2]})")
    unary = st.tuples(st.sampled_from(["sin", "cos", "tanh", "exp"]), children).map(
        lambda t: f"{t[0]}({t[1]})")
    power = st.tuples(children, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}")
    quotient = children.map(lambda c: f"(1/(2 + ({c})^2))")
    return st.one_of(binop, unary, power, quotient)


expressions = st.recursive(_leaf, _combine, max_leaves=8)
points = st.lists(st.floats(-1, 1, allow_nan=False), min_size=3, max_size=3)


@settings(max_examples=100, deadline=None)
@given(expressions, points, st.integers(0, 2))
def test_derivative_matches_central_difference(src, x, i):
    e = parse(src, 3)
    try:
        val = evaluate(e, x)
        if abs(val) > 1e6:
            return
        d = evaluate(differentiate(e, i), x)
        h = 1e-5
        xp, xm = list(x), list(x)
        xp[i] += h
        xm[i] -= h
        fd = (evaluate(e, xp) - evaluate(e, xm)) / (2 * h)
    except ExprDomainError:
        return
    assert abs(d - fd) <= 1e-6 * (1 + abs(val) + abs(d))


@settings(max_examples=50, deadline=None)
@given(expressions)
def test_print_parse_round_trip(src):
    e = parse(src, 3)
    e2 = parse(to_string(e), 3)
    rng = np.random.default_rng(0)
    for x in rng.uniform(-1, 1, (20, 3)):
        try:
            a = evaluate(e, x)
        except ExprDomainError:
            continue
        assert evaluate(e2, x) == pytest.approx(a, rel=1e-12, abs=1e-12)
