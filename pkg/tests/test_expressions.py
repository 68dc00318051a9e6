import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from strip_radius.expressions import (
    BinOp,
    Call,
    Derivative,
    EvaluationError,
    ExprSyntaxError,
    Num,
    Pow,
    UnknownIdentifierError,
    Var,
    derivatives,
    eval_on_grid,
    evaluate,
    free_variables,
    parse_expr,
    to_source,
)
from strip_radius.spectral import PeriodicGrid


def test_rational_at_origin():
    assert evaluate(parse_expr("1/(1+x^2)"), x=0.0, t=0.0) == 1.0


def test_sin_times_t():
    assert evaluate(parse_expr("sin(x)*t"), x=math.pi / 2, t=2.0) == pytest.approx(2.0, abs=1e-15)


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("1+*x")
    assert info.value.offset == 2


def test_offset_counts_bytes():
    # "é" is two bytes in UTF-8; the bad token sits at character 5, byte 6
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("(x+1)é")
    assert info.value.offset in (5, 6)
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("x + *")
    assert info.value.offset == 4


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as info:
        parse_expr("cosh(x)")
    assert info.value.name == "cosh"
    with pytest.raises(UnknownIdentifierError):
        parse_expr("y + 1")


@pytest.mark.parametrize("src", ["", "   ", "x^1.5", "x^y", "(x+1", "x+1)", "2 3", "sin x"])
def test_malformed(src):
    with pytest.raises(ExprSyntaxError):
        parse_expr(src)


@pytest.mark.parametrize(
    "src, expected",
    [
        ("-2^2", -4.0),
        ("2^-1", 0.5),
        ("2^(-2)", 0.25),
        ("8/4/2", 1.0),
        ("1-2-3", -4.0),
        ("2*3^2", 18.0),
        ("-x^2", -9.0),
        ("(-x)^2", 9.0),
        ("2^3^2", 64.0),
    ],
)
def test_precedence(src, expected):
    assert evaluate(parse_expr(src), x=3.0, t=0.0) == pytest.approx(expected)


def test_imaginary_unit_and_pi():
    v = evaluate(parse_expr("exp(i*pi)"), x=0.0)
    assert v == pytest.approx(-1.0 + 0j, abs=1e-15)


def test_zero_on_grid():
    grid = PeriodicGrid(2 * math.pi, 8)
    np.testing.assert_array_equal(eval_on_grid(parse_expr("0"), grid), np.zeros(8))


def test_x_on_small_grid():
    grid = PeriodicGrid(2 * math.pi, 4, origin=0.0)
    np.testing.assert_allclose(eval_on_grid(parse_expr("x"), grid).real, [0, math.pi / 2, math.pi, 3 * math.pi / 2])


def test_grid_matches_scalar_evaluation():
    grid = PeriodicGrid(2 * math.pi, 8)
    e = parse_expr("exp(i*x)")
    vec = eval_on_grid(e, grid, 0.3)
    for j, xj in enumerate(grid.x):
        assert vec[j] == evaluate(e, x=float(xj), t=0.3)


def test_division_by_zero_reports_node():
    grid = PeriodicGrid(2 * math.pi, 8, origin=-math.pi)
    with pytest.raises(EvaluationError) as info:
        eval_on_grid(parse_expr("1/x"), grid)
    assert info.value.index == 4


def test_sqrt_of_negative():
    with pytest.raises(EvaluationError):
        evaluate(parse_expr("sqrt(x)"), x=-1.0)


def test_free_variables():
    assert free_variables(parse_expr("sin(x)*t + pi")) == {"x", "t"}
    assert free_variables(parse_expr("xi^2", ("xi",))) == {"xi"}


def test_derivative_node_is_programmatic_only():
    d = Derivative(parse_expr("sin(x)"))
    assert evaluate(d, x=0.0) == pytest.approx(1.0)
    with pytest.raises(TypeError):
        to_source(d)


def test_jet_derivatives_of_tanh():
    x = np.linspace(-2, 2, 9)
    d = derivatives(parse_expr("tanh(x)"), "x", 3, x=x)
    th = np.tanh(x)
    np.testing.assert_allclose(d[1], 1 - th ** 2, atol=1e-14)
    np.testing.assert_allclose(d[2], -2 * th * (1 - th ** 2), atol=1e-14)
    np.testing.assert_allclose(d[3], -2 * (1 - th ** 2) * (1 - 3 * th ** 2), atol=1e-13)


def test_jet_derivatives_of_quotient():
    x = np.linspace(-3, 3, 13)
    d = derivatives(parse_expr("1/(1+x^2)"), "x", 2, x=x)
    np.testing.assert_allclose(d[1], -2 * x / (1 + x ** 2) ** 2, atol=1e-14)
    np.testing.assert_allclose(d[2], (6 * x ** 2 - 2) / (1 + x ** 2) ** 3, atol=1e-14)


# -- property tests ----------------------------------------------------------

_leaves = st.one_of(
    st.floats(min_value=0.1, max_value=5, allow_nan=False).map(Num),
    st.sampled_from([Var("x"), Var("t")]),
)


def _extend(children):
    return st.one_of(
        st.builds(lambda a, b, op: BinOp(op, a, b), children, children, st.sampled_from("+-*")),
        st.builds(lambda a, n: Pow(a, n), children, st.integers(0, 3)),
        st.builds(lambda a, f: Call(f, a), children, st.sampled_from(["sin", "cos", "tanh"])),
    )


_exprs = st.recursive(_leaves, _extend, max_leaves=8)


@settings(max_examples=150, deadline=None)
@given(_exprs)
def test_print_parse_roundtrip(e):
    once = parse_expr(to_source(e))
    assert once == e
    assert parse_expr(to_source(once)) == once


@settings(max_examples=80, deadline=None)
@given(_exprs, st.floats(-2, 2), st.floats(0, 1))
def test_vectorized_equals_scalar(e, x0, t0):
    xs = np.array([x0, x0 + 0.5, x0 - 0.25])
    vec = np.broadcast_to(evaluate(e, x=xs, t=np.float64(t0)), xs.shape)
    for j, xj in enumerate(xs):
        assert vec[j] == evaluate(e, x=float(xj), t=t0)
