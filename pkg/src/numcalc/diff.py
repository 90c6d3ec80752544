"""Forward-difference derivatives, partials and gradients.

The quotient ``(f(a + h) - f(a)) / h`` is sampled at ``h = 10**-k`` and the
resulting sequence is handed to :func:`numcalc.limits.classify`. Steps below
``10**-K_CAP`` are never used: past roughly sqrt(machine epsilon) the
subtraction ``f(a + h) - f(a)`` cancels catastrophically and the quotients
turn to noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import GradientError, InvalidQueryError, UnboundVariableError
from .expr import Expr, compile_scalar, free_variables
from .limits import LimitVerdict, SampleTrace, TraceEntry, check_variable_name, classify

K_CAP = 8
# With quotients capped at h = 1e-8 a window of 3 would compare D_5 and D_6,
# whose gap (f''/2) * 9e-6 already exceeds tol = 1e-5 for moderate curvature.
WINDOW = 2


@dataclass(frozen=True)
class DiffRequest:
    expr: Expr
    var: str
    point: Mapping[str, float]
    n: int = 8
    tol: float = 1e-5

    def __post_init__(self) -> None:
        check_variable_name(self.var)
        if self.n < 2:
            raise InvalidQueryError("n must be at least 2")
        if not self.tol > 0:
            raise InvalidQueryError("tol must be positive")
        if self.var not in self.point:
            raise UnboundVariableError(self.var)
        for name in sorted(free_variables(self.expr)):
            if name not in self.point:
                raise UnboundVariableError(name)
        object.__setattr__(self, "point", {k: float(v) for k, v in self.point.items()})


@dataclass(frozen=True)
class DerivativeResult:
    verdict: LimitVerdict
    trace: SampleTrace

    @property
    def estimate(self) -> float | None:
        return self.verdict.value


def diff_quotient_trace(req: DiffRequest) -> SampleTrace:
    """Quotients ``D_k`` for ``k = 0..min(n, K_CAP)``; ``x`` holds the step ``h``."""
    fn = compile_scalar(req.expr)
    at = dict(req.point)
    f_a = fn(at)
    entries = []
    for k in range(min(req.n, K_CAP) + 1):
        h = 10.0**-k
        at[req.var] = req.point[req.var] + h
        entries.append(TraceEntry(k, h, (fn(at) - f_a) / h))
    return SampleTrace(tuple(entries))


def derivative(req: DiffRequest) -> DerivativeResult:
    trace = diff_quotient_trace(req)
    return DerivativeResult(classify(trace, req.tol, WINDOW), trace)


def partial(req: DiffRequest) -> DerivativeResult:
    """Partial derivative along ``req.var``; every other variable stays at ``req.point``."""
    return derivative(req)


def gradient(
    f: Expr,
    vars: Sequence[str],
    point: Mapping[str, float],
    n: int = 8,
    tol: float = 1e-5,
) -> list[float]:
    """Gradient as a list ordered like ``vars``.

    Raises :class:`GradientError` naming the first variable whose quotient
    sequence does not converge.
    """
    out = []
    for name in vars:
        res = partial(DiffRequest(f, name, point, n, tol))
        if not res.verdict.converged:
            raise GradientError(name, dict(point), res.verdict.kind.value)
        out.append(res.estimate)
    return out
