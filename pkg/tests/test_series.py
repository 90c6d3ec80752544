import math

import pytest

from numcalc.errors import InvalidQueryError, NonFiniteSampleError
from numcalc.expr import parse
from numcalc.limits import VerdictKind, classify
from numcalc.series import SeriesQuery, checkpoint_indices, classify_series, partial_sums

EULER_GAMMA = 0.5772156649015329


def q(text, **kw):
    return SeriesQuery(parse(text), **kw)


def test_geometric_half_partial_sum():
    tr = partial_sums(q("1/2^k", max_terms=64))
    assert tr.xs[-1] == 64.0
    assert abs(tr.values[-1] - 1.0) <= 1e-12
    # each checkpoint holds 1 - 2^-N exactly, since every addend is a power of two
    assert all(s == 1 - 2.0**-n for n, s in zip(tr.xs, tr.values))


def test_zero_series():
    assert set(partial_sums(q("0")).values) == {0.0}


def test_counting_series():
    tr = partial_sums(q("1", max_terms=500))
    assert tr.values == tr.xs


def test_start_offset():
    tr = partial_sums(q("k", start=0, max_terms=10))
    assert tr.values[-1] == 55.0


def test_checkpoints_geometric_and_capped():
    marks = checkpoint_indices(1, 10000, 30)
    assert marks[0] == 1 and marks[-1] == 10000
    assert all(a < b for a, b in zip(marks, marks[1:]))
    ratios = [b / a for a, b in zip(marks[10:], marks[11:])]
    assert all(1.2 < r < 1.5 for r in ratios)
    assert checkpoint_indices(5, 5, 30) == [5]


def test_classify_examples():
    v = classify_series(q("1/2^k"))
    assert v.kind is VerdictKind.CONVERGED and abs(v.value - 1.0) <= 1e-6
    assert classify_series(q("k")).kind is VerdictKind.DIVERGES_PLUS_INF


@pytest.mark.parametrize("r", [0.5, -0.5, 0.9, 0.1, -0.8])
def test_geometric_oracle(r):
    v = classify_series(q(f"({r})^k"))
    assert v.kind is VerdictKind.CONVERGED
    assert abs(v.value - r / (1 - r)) <= 1e-6


def test_harmonic_is_inconclusive_under_defaults():
    tr = partial_sums(q("1/k"))
    # hand check: S_N tracks ln N + gamma, so consecutive checkpoint gaps
    # approach ln(ratio) and never fall below the tolerance
    for n, s in zip(tr.xs, tr.values):
        if n >= 100:
            assert abs(s - (math.log(n) + EULER_GAMMA)) <= 1 / n
    assert classify_series(q("1/k")).kind is VerdictKind.INCONCLUSIVE


def test_alternating_sign_never_converges():
    kinds = {classify_series(q("(-1)^k", max_terms=m)).kind for m in (50, 101, 1000, 10000)}
    assert VerdictKind.CONVERGED not in kinds
    assert classify_series(q("(-1)^k")).kind is VerdictKind.NO_LIMIT_OSCILLATION


@pytest.mark.parametrize("text", ["1/2^k", "k", "1/k", "(-1)^k", "1/k^2", "sin(k)", "(-1)^k/k"])
@pytest.mark.parametrize("tol, window", [(1e-8, 3), (1e-3, 2), (1e-12, 5)])
def test_composition_invariant(text, tol, window):
    query = q(text, tol=tol, window=window)
    assert classify_series(query) == classify(partial_sums(query), tol, window)


def test_validation():
    with pytest.raises(InvalidQueryError):
        q("k*n")
    with pytest.raises(InvalidQueryError):
        q("k", start=-1)
    with pytest.raises(InvalidQueryError):
        q("k", start=10, max_terms=5)
    with pytest.raises(InvalidQueryError):
        q("k", window=1)
    with pytest.raises(InvalidQueryError):
        q("k", tol=0.0)


def test_non_finite_term_raises():
    with pytest.raises(NonFiniteSampleError):
        partial_sums(q("1/k", start=0))
