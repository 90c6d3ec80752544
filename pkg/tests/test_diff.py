import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from numcalc.diff import K_CAP, DiffRequest, derivative, diff_quotient_trace, gradient, partial
from numcalc.errors import GradientError, InvalidQueryError, UnboundVariableError
from numcalc.expr import evaluate, parse
from numcalc.limits import VerdictKind

from oracles import DERIVATIVE_ORACLE, central_difference, same_bits


def req(text, var="x", **point):
    return DiffRequest(parse(text), var, point or {var: 0.0})


def linear_error_bound(m, c, a, h):
    """Worst-case rounding error of the computed forward quotient of m*x + c."""
    span = abs(a) + h
    top = abs(m) * span + abs(c)
    numerator = abs(m) * math.ulp(span) + math.ulp(abs(m) * span) + 2 * math.ulp(top)
    return 2 * numerator / h + 2 * abs(m) * math.ulp(1.0)


def test_linear_quotients_at_origin():
    assert diff_quotient_trace(req("5*x", x=0.0)).values == [5.0] * (K_CAP + 1)
    assert diff_quotient_trace(req("x", x=0.0)).values == [1.0] * (K_CAP + 1)
    assert gradient(parse("x + y"), ["x", "y"], {"x": 0.0, "y": 0.0}) == [1.0, 1.0]


@pytest.mark.xfail(strict=True, reason="a + 10^-k rounds in binary64, so f(a+h) - f(a) carries a rounding error that 1/h amplifies")
def test_linear_quotients_exact_away_from_origin():
    assert diff_quotient_trace(req("5*x", x=3.0)).values == [5.0] * (K_CAP + 1)


@pytest.mark.xfail(strict=True, reason="same cancellation as above")
def test_linear_gradient_exact_anywhere():
    assert gradient(parse("x + y"), ["x", "y"], {"x": -3.7, "y": 12.0}) == [1.0, 1.0]


def test_linear_quotients_within_rounding_bound():
    for k, entry in enumerate(diff_quotient_trace(req("5*x", x=3.0))):
        assert abs(entry.fx - 5.0) <= linear_error_bound(5.0, 0.0, 3.0, 10.0**-k)


def test_square_quotient_at_k1():
    tr = diff_quotient_trace(req("x^2", x=3.0))
    assert tr[1].x == 0.1
    assert tr[1].fx == pytest.approx(6.1, abs=1e-12)


def test_abs_forward_quotients():
    tr = diff_quotient_trace(req("abs(x)", x=0.0))
    assert tr.values == [1.0] * (K_CAP + 1)
    res = derivative(req("abs(x)", x=0.0))
    assert res.verdict.kind is VerdictKind.CONVERGED and res.estimate == 1.0


def test_steps_are_capped():
    tr = diff_quotient_trace(DiffRequest(parse("x^2"), "x", {"x": 1.0}, n=20))
    assert len(tr) == K_CAP + 1
    assert min(tr.xs) == 10.0**-K_CAP == 1e-8
    assert len(diff_quotient_trace(DiffRequest(parse("x^2"), "x", {"x": 1.0}, n=4))) == 5


@pytest.mark.parametrize("text, a, expected", [("x^2", 3.0, 6.0), ("sin(x)", 0.0, 1.0)])
def test_derivative_examples(text, a, expected):
    res = derivative(req(text, x=a))
    assert res.verdict.converged
    assert abs(res.estimate - expected) <= 1e-4
    assert res.estimate == res.verdict.value


def test_partial_examples():
    assert partial(DiffRequest(parse("x^2 + y^2"), "x", {"x": 1.0, "y": 5.0})).estimate == pytest.approx(2.0, abs=1e-4)
    assert partial(DiffRequest(parse("x*y"), "y", {"x": 3.0, "y": 4.0})).estimate == pytest.approx(3.0, abs=1e-4)
    assert partial(DiffRequest(parse("y"), "x", {"x": 1.0, "y": 2.0})).estimate == 0.0


def test_gradient_examples():
    g = gradient(parse("x^2 + 10*y^2"), ["x", "y"], {"x": 1.0, "y": 1.0})
    assert g == pytest.approx([2.0, 20.0], abs=1e-3)
    assert gradient(parse("x + y"), ["x", "y"], {"x": -3.7, "y": 12.0}) == pytest.approx([1.0, 1.0], abs=1e-6)
    assert gradient(parse("x^2"), ["x"], {"x": 0.0}) == pytest.approx([0.0], abs=1e-6)


def test_gradient_reports_failing_variable():
    with pytest.raises(GradientError) as info:
        gradient(parse("x + sqrt(y)"), ["x", "y"], {"x": 1.0, "y": 0.0})
    assert info.value.variable == "y"


def test_non_differentiable_point_does_not_converge():
    res = derivative(req("sqrt(x)", x=0.0))
    assert res.verdict.kind is VerdictKind.DIVERGES_PLUS_INF
    assert res.estimate is None


def test_request_validation():
    with pytest.raises(UnboundVariableError):
        DiffRequest(parse("x*y"), "x", {"x": 1.0})
    with pytest.raises(UnboundVariableError):
        DiffRequest(parse("x"), "z", {"x": 1.0})
    with pytest.raises(InvalidQueryError):
        DiffRequest(parse("x"), "x", {"x": 1.0}, n=1)
    with pytest.raises(InvalidQueryError):
        DiffRequest(parse("x"), "x", {"x": 1.0}, tol=0)


ORACLE_CASES = [(text, d, a) for text, d, pts in DERIVATIVE_ORACLE for a in pts]


@pytest.mark.parametrize("text, d, a", ORACLE_CASES)
def test_oracle_agreement(text, d, a):
    res = derivative(req(text, x=a))
    assert res.verdict.converged
    assert abs(res.estimate - d(a)) <= 1e-4
    # central differences are an independent second opinion on the analytic formula
    f = lambda x: evaluate(parse(text), {"x": x})  # noqa: E731
    assert abs(central_difference(f, a) - d(a)) <= 1e-6


@settings(max_examples=200, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(-10, 10))
def test_linear_quotients_track_slope(slope, intercept, a):
    e = parse(f"{slope!r}*x + {intercept!r}")
    tr = diff_quotient_trace(DiffRequest(e, "x", {"x": a}))
    for k, entry in enumerate(tr):
        assert entry.x == 10.0**-k
        assert abs(entry.fx - slope) <= linear_error_bound(slope, intercept, a, entry.x)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["x^2", "sin(x)", "exp(x)*x", "x^3 - x"]), st.floats(-2, 2))
def test_gradient_matches_derivative_bitwise(text, a):
    e = parse(text)
    res = derivative(DiffRequest(e, "x", {"x": a}))
    if res.verdict.converged:
        assert same_bits(gradient(e, ["x"], {"x": a}), [res.estimate])
