import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_env, random_expr
from varcond.jetspace import JetCoordinate, MultiIndex, layout
from varcond.symexpr import (
    Bump,
    Const,
    EvaluationError,
    Indicator,
    Jet,
    ParseError,
    Pow,
    Var,
    diff,
    diff_jet,
    diff_x,
    evaluate,
    numerically_equal,
    parse,
    parse_x,
    simplify,
    to_text,
    total_derivative,
    total_derivative_multi,
)

LAY11 = layout(1, 1, 1)
LAY22 = layout(2, 2, 2)


def P(text, lay=LAY11):
    return parse(text, lay)


def jet(name, lay=LAY22):
    return parse(name, lay)


# --- parser --------------------------------------------------------------


def test_parse_basic_tree():
    e = P("sqrt(1 + u1_x1^2)")
    assert isinstance(e, Pow) and e.exp == Fraction(1, 2)
    assert evaluate(e, {Jet(LAY11.coords[1]): 1.0}) == pytest.approx(math.sqrt(2))


def test_unary_minus_binds_looser_than_power():
    e = P("-u1^2")
    assert evaluate(e, {Jet(LAY11.coords[0]): 3.0}) == -9.0


@pytest.mark.parametrize(
    "text,value",
    [("2^3", 8), ("2^-1", 0.5), ("4^(1/2)", 2), ("4^(-1/2)", 0.5), ("1e-2*100", 1), ("7/2", 3.5)],
)
def test_numbers_and_exponents(text, value):
    assert float(evaluate(parse_x(text, 1), {})) == pytest.approx(value)


@pytest.mark.parametrize(
    "text,fragment,col",
    [
        ("u1_x2x1", "u1_x1x2", 1),
        ("u2", "unknown identifier", 1),
        ("x3", "unknown identifier", 1),
        ("u1_x1x1", "exceeding s=1", 1),
        ("u1^(1/3)", "half-integer", 4),
        ("(u1 + 1", "expected ')'", 8),
        ("u1 $ 2", "unexpected character", 4),
        ("u1^2^2", "chained", 5),
        ("foo(u1)", "unknown identifier", 1),
    ],
)
def test_parse_errors(text, fragment, col):
    lay = layout(2, 1, 1) if text.startswith("u1_x2") else LAY11
    with pytest.raises(ParseError) as info:
        parse(text, lay)
    assert fragment in str(info.value)
    assert info.value.position + 1 == col


def test_parse_x_rejects_jets():
    with pytest.raises(ParseError):
        parse_x("u1 + x1", 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_print_parse_roundtrip_numeric(seed):
    rng = np.random.default_rng(seed)
    e = random_expr(rng, LAY22, depth=4)
    back = parse(to_text(e), LAY22)
    assert numerically_equal(e, back, count=5, seed=seed)


def test_printer_output_is_grammar_text():
    e = simplify(P("u1*u1_x1/(1 + u1_x1^2)^(3/2) - 3/4*u1"))
    text = to_text(e)
    assert numerically_equal(e, P(text))


# --- evaluation ----------------------------------------------------------


@pytest.mark.parametrize(
    "text,env",
    [("log(u1)", 0.0), ("sqrt(u1)", -1.0), ("1/u1", 0.0), ("u1^(-1/2)", 0.0)],
)
def test_domain_errors(text, env):
    with pytest.raises(EvaluationError):
        evaluate(P(text), {Jet(LAY11.coords[0]): env})


def test_domain_error_reports_offending_index():
    vals = np.array([1.0, 2.0, -1.0, 3.0])
    with pytest.raises(EvaluationError) as info:
        evaluate(P("log(u1)"), {Jet(LAY11.coords[0]): vals})
    assert info.value.index == 2


def test_vectorized_matches_scalar():
    e = P("sin(u1)*exp(u1_x1) + x1^2")
    xs = np.linspace(-1, 1, 7)
    env = {Var(1): xs, Jet(LAY11.coords[0]): xs * 2, Jet(LAY11.coords[1]): -xs}
    vec = evaluate(e, env)
    for i, x in enumerate(xs):
        one = {Var(1): x, Jet(LAY11.coords[0]): 2 * x, Jet(LAY11.coords[1]): -x}
        assert vec[i] == pytest.approx(evaluate(e, one))


def test_bump_and_indicator_values():
    b = Bump(2, 0, Var(1))
    assert evaluate(b, {Var(1): 0.5}) == pytest.approx(0.75)
    assert evaluate(b, {Var(1): 1.5}) == 0.0
    assert evaluate(Bump(3, 3, Var(1)), {Var(1): -0.3}) == pytest.approx(6.0)
    ind = Indicator((0.0, 0.0), 1.0, "ball")
    assert evaluate(ind, {Var(1): 0.5, Var(2): 0.5}) == 1.0
    assert evaluate(ind, {Var(1): 0.9, Var(2): 0.9}) == 0.0


# --- simplification -------------------------------------------------------


@pytest.mark.parametrize(
    "text,expected",
    [
        ("2*u1 - u1 - u1", "0"),
        ("u1_x1*u1_x1", "u1_x1^2"),
        ("3*(u1 + 1) - 3", "3*u1"),
        ("-(u1 - u1_x1) + u1", "u1_x1"),
        ("log(exp(u1))", "u1"),
        ("sin(0) + cos(0)", "1"),
        ("(u1^2)^3", "u1^6"),
    ],
)
def test_simplify(text, expected):
    assert simplify(P(text)) == simplify(P(expected))


def test_half_power_not_collapsed_unsafely():
    # sqrt(u^2) is |u|, so it must not become u
    e = simplify(P("(u1^2)^(1/2)"))
    assert evaluate(e, {Jet(LAY11.coords[0]): -2.0}) == pytest.approx(2.0)


# --- calculus -------------------------------------------------------------


def test_diff_jet_example1():
    L = P("sqrt(1 + u1_x1^2)")
    d = diff_jet(L, LAY11.coords[1])
    assert numerically_equal(d, P("u1_x1/sqrt(1 + u1_x1^2)"))
    assert diff_jet(L, LAY11.coords[0]) == Const(0)


def test_total_derivative_chain():
    lay = layout(2, 1, 2)
    e = parse("u1^2", lay)
    d = total_derivative_multi(e, MultiIndex.from_sequence(2, (1, 1)))
    assert numerically_equal(
        d, parse("2*u1*u1_x1x1 + 2*u1_x1^2", layout(2, 1, 2))
    )


def test_total_derivative_with_x():
    e = P("x1*u1")
    d = total_derivative(e, 1)
    assert numerically_equal(d, parse("u1 + x1*u1_x1", layout(1, 1, 2)))


def test_diff_x_bump_chain_rule():
    e = Bump(2, 0, Var(1) * 4)
    d = diff_x(e, 1)
    assert evaluate(d, {Var(1): 0.1}) == pytest.approx(-2 * 0.4 * 4)


def _fd(e, sym, env, h=1e-5):
    up, dn = dict(env), dict(env)
    up[sym] += h
    dn[sym] -= h
    return (evaluate(e, up) - evaluate(e, dn)) / (2 * h)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_diff_jet_matches_finite_difference(seed):
    rng = np.random.default_rng(seed)
    e = random_expr(rng, LAY22, depth=4)
    coord = LAY22.coords[int(rng.integers(0, LAY22.q))]
    sym = Jet(coord)
    env = random_env(rng, e.free_symbols | {sym})
    exact = evaluate(diff_jet(e, coord), env)
    approx = _fd(e, sym, env)
    assert abs(exact - approx) <= 1e-5 * (1 + abs(exact))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_total_derivatives_commute(seed):
    rng = np.random.default_rng(seed)
    lay = layout(2, 2, 2)
    e = random_expr(rng, lay.with_order(1), depth=3)
    d12 = total_derivative(total_derivative(e, 1), 2)
    d21 = total_derivative(total_derivative(e, 2), 1)
    assert numerically_equal(d12, d21, count=8, seed=seed)


def test_diff_by_var_is_partial():
    e = P("x1*u1")
    assert diff(e, Var(1)) == Jet(LAY11.coords[0])
