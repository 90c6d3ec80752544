import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from numcalc.errors import InvalidQueryError, ParseError, UnboundVariableError, UnknownFunctionError
from numcalc.expr import (
    FUNCTIONS,
    Binary,
    Call,
    Constant,
    Unary,
    Variable,
    eval_vec,
    evaluate,
    format_expr,
    free_variables,
    parse,
)

from oracles import CORPUS, same_bits


def test_corpus_size():
    assert len(CORPUS) == 50 and len(set(CORPUS)) == 50


# -- parse -------------------------------------------------------------------


def test_parse_polynomial():
    assert parse("x^2 + 1") == Binary("+", Binary("^", Variable("x"), Constant(2.0)), Constant(1.0))


def test_parse_quotient_of_call():
    assert parse("sin(x)/x") == Binary("/", Call("sin", Variable("x")), Variable("x"))


def test_incomplete_expression_reports_offset():
    with pytest.raises(ParseError) as info:
        parse("2 +")
    assert info.value.offset == 3


@pytest.mark.parametrize(
    "text, offset",
    [("", 0), ("   ", 0), ("(x", 2), ("x)", 1), ("2x", 1), ("x y", 2), ("3 $ 4", 2), ("sin x", 0), ("x ^", 3)],
)
def test_syntax_errors(text, offset):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.offset == offset


@pytest.mark.parametrize("text", ["log(x)", "max(x)", "foo(1)"])
def test_unknown_function(text):
    with pytest.raises(UnknownFunctionError) as info:
        parse(text)
    assert info.value.offset == 0


def test_precedence_and_associativity():
    assert parse("-x^2") == Unary(Binary("^", Variable("x"), Constant(2.0)))
    assert parse("2^3^2") == Binary("^", Constant(2.0), Binary("^", Constant(3.0), Constant(2.0)))
    assert parse("1 - 2 - 3") == Binary("-", Binary("-", Constant(1.0), Constant(2.0)), Constant(3.0))
    assert parse("2^-1") == Binary("^", Constant(2.0), Unary(Constant(1.0)))
    assert evaluate(parse("2^3^2"), {}) == 512.0
    assert evaluate(parse("-2^2"), {}) == -4.0


def test_reserved_constants():
    assert parse("pi") == Constant(math.pi, "pi")
    assert evaluate(parse("e"), {}) == math.e
    assert free_variables(parse("pi*r^2 + e")) == {"r"}


def test_free_variables():
    assert free_variables(parse("x*y + sin(z) - 3")) == {"x", "y", "z"}
    assert free_variables(parse("2 + 3")) == frozenset()


@pytest.mark.parametrize("text", CORPUS)
def test_round_trip_corpus(text):
    tree = parse(text)
    assert parse(format_expr(tree)) == tree


# -- evaluate ----------------------------------------------------------------


def test_eval_examples():
    assert evaluate(parse("x"), {"x": 7}) == 7.0
    assert evaluate(parse("1/x"), {"x": 0.0}) == math.inf
    assert math.isnan(evaluate(parse("sqrt(x)"), {"x": -1.0}))


@pytest.mark.parametrize(
    "text, value, expected",
    [
        ("1/x", -0.0, -math.inf),
        ("-1/x", 0.0, -math.inf),
        ("x/x", 0.0, math.nan),
        ("ln(x)", 0.0, -math.inf),
        ("ln(x)", -1.0, math.nan),
        ("log10(x)", 1000.0, 3.0),
        ("exp(x)", 1000.0, math.inf),
        ("x^0.5", -4.0, math.nan),
        ("x^3", -2.0, -8.0),
        ("x^-1", 0.0, math.inf),
        ("x^-1", -0.0, -math.inf),
        ("x^1000", 10.0, math.inf),
        ("x^1001", -10.0, -math.inf),
        ("sin(x)", math.inf, math.nan),
        ("(-1)^x", 7.0, -1.0),
        ("(-1)^x", 10000.0, 1.0),
    ],
)
def test_eval_is_total(text, value, expected):
    got = evaluate(parse(text), {"x": value})
    if math.isnan(expected):
        assert math.isnan(got)
    else:
        assert got == expected


def test_unbound_variable():
    with pytest.raises(UnboundVariableError) as info:
        evaluate(parse("x + y"), {"x": 1.0})
    assert info.value.name == "y"


# -- eval_vec ----------------------------------------------------------------


def test_eval_vec_examples():
    assert eval_vec(parse("x^2"), "x", [1, 2, 3]).tolist() == [1.0, 4.0, 9.0]
    assert eval_vec(parse("x"), "x", []).tolist() == []
    out = eval_vec(parse("sin(x)"), "x", [0.0, math.pi])
    assert same_bits(out, [0.0, evaluate(parse("sin(x)"), {"x": math.pi})])


def test_eval_vec_constant_broadcasts():
    assert eval_vec(parse("3"), "x", [0.0, 1.0]).tolist() == [3.0, 3.0]


def test_eval_vec_rejects_other_variables():
    with pytest.raises(InvalidQueryError):
        eval_vec(parse("x + y"), "x", [1.0])
    with pytest.raises(InvalidQueryError):
        eval_vec(parse("y"), "x", [1.0])


def test_eval_vec_special_values_match_scalar():
    xs = [0.0, -0.0, -1.0, 1.0, math.inf, -math.inf, math.nan, 1e308, -1e-320]
    for text in ["1/x", "x/x", "ln(x)", "sqrt(x)", "x^0.5", "x^-3", "exp(x)", "tan(x)", "(-2)^x", "x^x"]:
        e = parse(text)
        vec = eval_vec(e, "x", xs)
        scalar = [evaluate(e, {"x": x}) for x in xs]
        assert same_bits(vec, scalar), text


# -- properties --------------------------------------------------------------


def _trees(var_names=("x", "y")):
    leaves = st.one_of(
        st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.0, 10.0, 1e-3, 0.1]).map(Constant),
        st.floats(0, 100, allow_nan=False).map(Constant),
        st.sampled_from(var_names).map(Variable),
        st.sampled_from(["pi", "e"]).map(lambda n: parse(n)),
    )

    def extend(children):
        return st.one_of(
            children.map(Unary),
            st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: Binary(*t)),
            st.tuples(st.sampled_from(sorted(FUNCTIONS)), children).map(lambda t: Call(*t)),
        )

    return st.recursive(leaves, extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(_trees())
def test_round_trip_property(tree):
    text = format_expr(tree)
    once = parse(text)
    assert parse(format_expr(once)) == once
    assert once == tree


@settings(max_examples=300, deadline=None)
@given(
    _trees(("x",)),
    st.lists(st.one_of(st.floats(-50, 50), st.sampled_from([0.0, -0.0, 1.0, -1.0, math.inf, -math.inf, math.nan])), max_size=20),
)
def test_scalar_vector_bit_equality(tree, xs):
    vec = eval_vec(tree, "x", xs)
    scalar = [evaluate(tree, {"x": x}) for x in xs]
    assert same_bits(vec, scalar)


@settings(max_examples=100, deadline=None)
@given(_trees(), st.floats(-10, 10), st.floats(-10, 10))
def test_evaluation_is_pure(tree, x, y):
    b = {"x": x, "y": y}
    assert same_bits(evaluate(tree, b), evaluate(tree, b))
    assert isinstance(evaluate(tree, b), float)


def test_nan_results_are_canonical():
    for text in ["-(x - x)", "-sqrt(x)", "x * -x"]:
        e = parse(text)
        for x in (math.nan, -math.inf, -1.0):
            got = evaluate(e, {"x": x})
            if math.isnan(got):
                assert same_bits(got, math.nan)
                assert same_bits(eval_vec(e, "x", [x]), [math.nan])


def test_eval_vec_returns_fresh_array():
    xs = np.array([1.0, 2.0])
    out = eval_vec(parse("x"), "x", xs)
    out[0] = 99.0
    assert xs[0] == 1.0
