"""Partial sums of a series and a convergence verdict read off them.

Partial sums are recorded only at geometrically spaced checkpoints: at unit
spacing a slowly moving sequence passes any consecutive-difference test long
before it has settled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidQueryError, NonFiniteSampleError
from .expr import Expr, compile_scalar, free_variables
from .limits import LimitVerdict, SampleTrace, TraceEntry, check_variable_name, classify


@dataclass(frozen=True)
class SeriesQuery:
    term: Expr
    index_var: str = "k"
    start: int = 1
    max_terms: int = 10000
    checkpoints: int = 30
    tol: float = 1e-8
    window: int = 3

    def __post_init__(self) -> None:
        check_variable_name(self.index_var)
        free = free_variables(self.term)
        if not free <= {self.index_var}:
            raise InvalidQueryError(
                f"term must depend on {self.index_var!r} only; free variables are {sorted(free)}"
            )
        if self.start < 0:
            raise InvalidQueryError("start must be >= 0")
        if self.max_terms < self.start:
            raise InvalidQueryError("max_terms must be >= start")
        if self.window < 2:
            raise InvalidQueryError("window must be >= 2")
        if self.max_terms < self.window:
            raise InvalidQueryError("max_terms must be >= window")
        if self.checkpoints < 2:
            raise InvalidQueryError("checkpoints must be >= 2")
        if not self.tol > 0:
            raise InvalidQueryError("tol must be positive")


def checkpoint_indices(start: int, max_terms: int, count: int) -> list[int]:
    """Up to ``count`` geometrically spaced indices from ``max(start, 1)`` to ``max_terms``.

    Rounding collapses neighbours at the low end, so fewer may come back.
    """
    lo = max(start, 1)
    if max_terms <= lo:
        return [max_terms]
    ratio = (max_terms / lo) ** (1.0 / (count - 1))
    out: list[int] = []
    for j in range(count - 1):
        idx = min(int(round(lo * ratio**j)), max_terms)
        if not out or idx > out[-1]:
            out.append(idx)
    if out[-1] != max_terms:
        out.append(max_terms)
    return out


def partial_sums(q: SeriesQuery) -> SampleTrace:
    """Trace entry ``j`` holds ``(j, N_j, S_{N_j})`` with ``S_N = sum_{k=start..N} term(k)``."""
    fn = compile_scalar(q.term)
    marks = checkpoint_indices(q.start, q.max_terms, q.checkpoints)
    entries = []
    total = 0.0
    nxt = 0
    for k in range(q.start, q.max_terms + 1):
        t = fn({q.index_var: float(k)})
        if not math.isfinite(t):
            raise NonFiniteSampleError(f"term is {t} at {q.index_var}={k}", k)
        total += t
        if k == marks[nxt]:
            entries.append(TraceEntry(nxt, float(k), total))
            nxt += 1
    return SampleTrace(tuple(entries))


def classify_series(q: SeriesQuery) -> LimitVerdict:
    return classify(partial_sums(q), q.tol, q.window)
