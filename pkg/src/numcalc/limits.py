"""Numerical limits by geometric sampling.

A limit toward a finite point ``a`` is probed at ``a + 10**-k`` (or
``a - 10**-k`` from the left); a limit at infinity at ``+-(10**k + eps_k)``
where ``eps_k`` is an optional seeded uniform perturbation that breaks
resonance with periodic functions. The resulting sequence is classified by
:func:`classify`, whose rules look only at the trace:

* **converged**: the last ``window`` consecutive differences are all within
  ``tol`` (scaled by ``|last|`` when that exceeds 1).
* **diverges**: the last ``window`` samples share a sign and grow strictly in
  magnitude, and either the last one reaches :data:`DIVERGENCE_BOUND` or the
  steps themselves are not shrinking (steady growth, e.g. ``ln(x)`` at 0+).
* **no limit (oscillation)**: the last differences alternate in sign without
  shrinking, or the recent samples keep wandering back and forth over a range
  that is not contracting, or the last ``window`` samples are all NaN.
* anything else is **inconclusive**.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

from .errors import InvalidQueryError, ParseError
from .expr import CONSTANTS, Expr, compile_scalar, free_variables

DIVERGENCE_BOUND = 1e12
# relative slack when comparing successive step sizes, absorbs round-off
_STEP_SLACK = 1e-9


class TraceEntry(NamedTuple):
    k: int
    x: float
    fx: float


@dataclass(frozen=True)
class SampleTrace:
    """Ordered ``(k, x_k, f(x_k))`` records with ``k`` = 0, 1, 2, ..."""

    entries: tuple[TraceEntry, ...] = ()

    def __post_init__(self) -> None:
        for i, entry in enumerate(self.entries):
            if entry.k != i:
                raise ValueError("trace indices must be consecutive from 0")

    @classmethod
    def from_values(cls, xs: Sequence[float], fxs: Sequence[float]) -> "SampleTrace":
        return cls(tuple(TraceEntry(k, float(x), float(fx)) for k, (x, fx) in enumerate(zip(xs, fxs))))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[TraceEntry]:
        return iter(self.entries)

    def __getitem__(self, i: int) -> TraceEntry:
        return self.entries[i]

    @property
    def xs(self) -> list[float]:
        return [e.x for e in self.entries]

    @property
    def values(self) -> list[float]:
        return [e.fx for e in self.entries]

    def truncated(self, length: int) -> "SampleTrace":
        return SampleTrace(self.entries[:length])


class VerdictKind(str, enum.Enum):
    CONVERGED = "converged"
    DIVERGES_PLUS_INF = "diverges_plus_inf"
    DIVERGES_MINUS_INF = "diverges_minus_inf"
    NO_LIMIT_OSCILLATION = "no_limit_oscillation"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class LimitVerdict:
    kind: VerdictKind
    value: float | None
    iterations_used: int
    traces: tuple[SampleTrace, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.kind is VerdictKind.CONVERGED:
            if self.value is None or not math.isfinite(self.value):
                raise ValueError("a converged verdict needs a finite value")
        elif self.value is not None:
            raise ValueError("only converged verdicts carry a value")

    @property
    def converged(self) -> bool:
        return self.kind is VerdictKind.CONVERGED

    @property
    def trace(self) -> SampleTrace:
        return self.traces[0] if self.traces else SampleTrace()


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTH = "both"


@dataclass(frozen=True)
class Finite:
    a: float
    side: Side = Side.BOTH


class Infinity(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


Target = Finite | Infinity


@dataclass(frozen=True)
class LimitQuery:
    expr: Expr
    var: str
    target: Target
    n: int = 12
    tol: float = 1e-8
    window: int = 3
    perturb: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        check_variable_name(self.var)
        free = free_variables(self.expr)
        if not free <= {self.var}:
            raise InvalidQueryError(
                f"expression must depend on {self.var!r} only; free variables are {sorted(free)}"
            )
        if self.n < 2:
            raise InvalidQueryError("n must be at least 2")
        if not self.tol > 0:
            raise InvalidQueryError("tol must be positive")
        if not 2 <= self.window <= self.n:
            raise InvalidQueryError("window must satisfy 2 <= window <= n")
        if isinstance(self.target, Finite) and not math.isfinite(self.target.a):
            raise InvalidQueryError("finite target must be a finite number")


def check_variable_name(name: str) -> None:
    if name in CONSTANTS:
        raise ParseError(f"{name!r} is a reserved constant and cannot be used as a variable", 0)
    if not name.isidentifier() or not name[0].isalpha():
        raise ParseError(f"{name!r} is not a valid variable name", 0)


# -- samplers ----------------------------------------------------------------


def _check_univariate(f: Expr, var: str) -> None:
    free = free_variables(f)
    if not free <= {var}:
        raise InvalidQueryError(
            f"expression must depend on {var!r} only; free variables are {sorted(free)}"
        )


def _iter_one_sided(f: Expr, var: str, a: float, side: Side) -> Iterator[TraceEntry]:
    fn = compile_scalar(f)
    k = 0
    while True:
        h = 10.0**-k
        x = a + h if side is Side.RIGHT else a - h
        yield TraceEntry(k, x, fn({var: x}))
        k += 1


def _iter_at_infinity(f: Expr, var: str, sign: Infinity, perturb: bool, seed: int) -> Iterator[TraceEntry]:
    fn = compile_scalar(f)
    rng = random.Random(seed)
    s = 1.0 if sign is Infinity.PLUS else -1.0
    k = 0
    while True:
        eps = rng.random() if perturb else 0.0
        x = s * (10.0**k + eps)
        yield TraceEntry(k, x, fn({var: x}))
        k += 1


def _take(it: Iterator[TraceEntry], count: int) -> SampleTrace:
    return SampleTrace(tuple(next(it) for _ in range(count)))


def sample_one_sided(f: Expr, var: str, a: float, side: Side | str, n: int) -> SampleTrace:
    """Probe ``f`` at ``a +- 10**-k`` for ``k = 0..n``."""
    side = Side(side)
    if side is Side.BOTH:
        raise InvalidQueryError("sample_one_sided needs side 'left' or 'right'")
    if not math.isfinite(a):
        raise InvalidQueryError("a must be finite")
    _check_univariate(f, var)
    return _take(_iter_one_sided(f, var, a, side), n + 1)


def sample_at_infinity(
    f: Expr, var: str, sign: Infinity | str, n: int, perturb: bool = False, seed: int = 0
) -> SampleTrace:
    """Probe ``f`` at ``sign * (10**k + eps_k)`` for ``k = 0..n``."""
    _check_univariate(f, var)
    return _take(_iter_at_infinity(f, var, Infinity(sign), perturb, seed), n + 1)


# -- classification ----------------------------------------------------------


def _cauchy(vals: Sequence[float], tol: float, window: int) -> bool:
    if len(vals) < window + 1:
        return False
    tail = vals[-(window + 1):]
    if not all(math.isfinite(v) for v in tail):
        return False
    threshold = tol * max(1.0, abs(tail[-1]))
    return all(abs(tail[i + 1] - tail[i]) <= threshold for i in range(window))


def _diverging(vals: Sequence[float], window: int) -> VerdictKind | None:
    tail = vals[-window:]
    if len(tail) < window or any(math.isnan(v) for v in tail):
        return None
    if all(v > 0 for v in tail):
        kind = VerdictKind.DIVERGES_PLUS_INF
    elif all(v < 0 for v in tail):
        kind = VerdictKind.DIVERGES_MINUS_INF
    else:
        return None
    mags = [abs(v) for v in tail]
    if all(math.isinf(m) for m in mags):
        return kind
    if not all(mags[i + 1] > mags[i] for i in range(window - 1)):
        return None
    if mags[-1] >= DIVERGENCE_BOUND:
        return kind
    # steady growth: steps never shrink (needs one extra sample for the first step)
    if len(vals) < window + 1 or math.isinf(mags[-1]):
        return None
    ext = [abs(v) for v in vals[-(window + 1):]]
    if math.isnan(ext[0]) or not ext[1] > ext[0] or (vals[-(window + 1)] > 0) != (tail[0] > 0):
        return None
    steps = [ext[i + 1] - ext[i] for i in range(window)]
    if all(steps[i + 1] >= steps[i] * (1.0 - _STEP_SLACK) for i in range(window - 1)):
        return kind
    return None


def _oscillating(vals: Sequence[float], window: int) -> bool:
    tail = vals[-(window + 1):]
    if len(tail) < window + 1 or not all(math.isfinite(v) for v in tail):
        return False
    diffs = [tail[i + 1] - tail[i] for i in range(window)]
    alternating = all(d != 0 for d in diffs) and all(
        (diffs[i] > 0) != (diffs[i + 1] > 0) for i in range(window - 1)
    )
    if alternating and all(abs(diffs[i + 1]) >= 0.5 * abs(diffs[i]) for i in range(window - 1)):
        return True
    # wandering: direction changes inside the window and the spread of the
    # recent block has not contracted against the block before it
    ups = any(d > 0 for d in diffs)
    downs = any(d < 0 for d in diffs)
    if not (ups and downs):
        return False
    prev = vals[-(2 * window + 1):-window]
    if len(prev) < window + 1 or not all(math.isfinite(v) for v in prev):
        return False
    recent_spread = max(tail) - min(tail)
    prev_spread = max(prev) - min(prev)
    return recent_spread > 0 and recent_spread >= 0.5 * prev_spread


def classify_values(values: Sequence[float], tol: float = 1e-8, window: int = 3) -> tuple[VerdictKind, float | None]:
    """Classify a raw sequence; returns ``(kind, value)``."""
    if not values:
        raise InvalidQueryError("cannot classify an empty trace")
    if not tol > 0 or window < 2:
        raise InvalidQueryError("need tol > 0 and window >= 2")
    vals = list(values)
    last = vals[-window:]
    if len(last) == window and all(math.isnan(v) for v in last):
        return VerdictKind.NO_LIMIT_OSCILLATION, None
    if any(math.isnan(v) for v in vals[-(window + 1):]):
        return VerdictKind.INCONCLUSIVE, None
    if _cauchy(vals, tol, window):
        return VerdictKind.CONVERGED, vals[-1]
    kind = _diverging(vals, window)
    if kind is not None:
        return kind, None
    if _oscillating(vals, window):
        return VerdictKind.NO_LIMIT_OSCILLATION, None
    return VerdictKind.INCONCLUSIVE, None


def classify(trace: SampleTrace, tol: float = 1e-8, window: int = 3) -> LimitVerdict:
    """Classify the ``fx`` column of ``trace``."""
    kind, value = classify_values(trace.values, tol, window)
    return LimitVerdict(kind, value, len(trace), (trace,))


# -- driver ------------------------------------------------------------------


def _run(it: Iterator[TraceEntry], n: int, tol: float, window: int) -> LimitVerdict:
    entries: list[TraceEntry] = []
    vals: list[float] = []
    for entry in it:
        entries.append(entry)
        vals.append(entry.fx)
        k = entry.k
        if k >= window and _cauchy(vals, tol, window):
            break
        if k >= n:
            break
    return classify(SampleTrace(tuple(entries)), tol, window)


def limit(q: LimitQuery) -> LimitVerdict:
    """Estimate the limit described by ``q``.

    Sampling stops early at the first ``k >= window`` whose trace already
    satisfies the convergence rule. For two-sided targets both sides must
    converge to values within ``10 * tol`` (scaled like the Cauchy test) of
    each other; the reported value is their mean.
    """
    target = q.target
    if isinstance(target, Infinity):
        it = _iter_at_infinity(q.expr, q.var, target, q.perturb, q.seed)
        return _run(it, q.n, q.tol, q.window)
    if target.side is not Side.BOTH:
        return _run(_iter_one_sided(q.expr, q.var, target.a, target.side), q.n, q.tol, q.window)

    left = _run(_iter_one_sided(q.expr, q.var, target.a, Side.LEFT), q.n, q.tol, q.window)
    right = _run(_iter_one_sided(q.expr, q.var, target.a, Side.RIGHT), q.n, q.tol, q.window)
    used = max(left.iterations_used, right.iterations_used)
    traces = (left.trace, right.trace)
    if left.converged and right.converged:
        mean = 0.5 * (left.value + right.value)
        if abs(left.value - right.value) <= 10 * q.tol * max(1.0, abs(mean)):
            return LimitVerdict(VerdictKind.CONVERGED, mean, used, traces)
        return LimitVerdict(VerdictKind.NO_LIMIT_OSCILLATION, None, used, traces)
    if left.converged or right.converged:
        worse = right if left.converged else left
        return LimitVerdict(worse.kind, None, used, traces)
    if left.kind is right.kind:
        kind = left.kind
    elif VerdictKind.INCONCLUSIVE in (left.kind, right.kind):
        kind = VerdictKind.INCONCLUSIVE
    else:
        kind = VerdictKind.NO_LIMIT_OSCILLATION
    return LimitVerdict(kind, None, used, traces)
