"""Composite quadrature on a uniform partition of [a, b].

Every rule accumulates samples left to right in ascending ``k`` with plain
``+=``; no pairwise or compensated summation. The vectorized Riemann path
reduces with a sequential prefix sum so its result matches the loop bit for
bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidQueryError, NonFiniteSampleError
from .expr import Expr, compile_scalar, eval_vec, free_variables


class Rule(str, enum.Enum):
    RIEMANN_LEFT = "riemann_left"
    RIEMANN_RIGHT = "riemann_right"
    RIEMANN_MIDPOINT = "riemann_midpoint"
    TRAPEZOID = "trapezoid"
    SIMPSON = "simpson"


RIEMANN_RULES = (Rule.RIEMANN_LEFT, Rule.RIEMANN_RIGHT, Rule.RIEMANN_MIDPOINT)


@dataclass(frozen=True)
class Partition:
    a: float
    b: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise InvalidQueryError("interval endpoints must be finite")
        if not self.a < self.b:
            raise InvalidQueryError(f"need a < b, got a={self.a!r}, b={self.b!r}")
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise InvalidQueryError("subinterval count n must be an integer >= 1")
        pts = self.endpoints
        if any(not pts[i] < pts[i + 1] for i in range(self.n)):
            raise InvalidQueryError("partition too fine for binary64: endpoints are not strictly increasing")

    @property
    def delta(self) -> float:
        return (self.b - self.a) / self.n

    @property
    def endpoints(self) -> list[float]:
        """``x_k = a + k*delta``, with ``x_n`` pinned to ``b``."""
        d = self.delta
        return [self.a + k * d for k in range(self.n)] + [self.b]


@dataclass(frozen=True)
class QuadratureSpec:
    expr: Expr
    var: str
    partition: Partition
    rule: Rule = Rule.TRAPEZOID

    def __post_init__(self) -> None:
        object.__setattr__(self, "rule", Rule(self.rule))
        free = free_variables(self.expr)
        if not free <= {self.var}:
            raise InvalidQueryError(
                f"integrand must depend on {self.var!r} only; free variables are {sorted(free)}"
            )
        if self.rule is Rule.SIMPSON and self.partition.n % 2:
            raise InvalidQueryError(f"Simpson's rule needs an even n, got {self.partition.n}")


def _sampler(spec: QuadratureSpec) -> Callable[[float], float]:
    fn = compile_scalar(spec.expr)
    var = spec.var

    def sample(x: float) -> float:
        y = fn({var: x})
        if not math.isfinite(y):
            raise NonFiniteSampleError(f"integrand is {y} at {var}={x!r}", x)
        return y

    return sample


def riemann_points(spec: QuadratureSpec) -> list[float]:
    pts = spec.partition.endpoints
    n = spec.partition.n
    if spec.rule is Rule.RIEMANN_RIGHT:
        return pts[1:]
    if spec.rule is Rule.RIEMANN_LEFT:
        return pts[:n]
    if spec.rule is Rule.RIEMANN_MIDPOINT:
        return [(pts[k] + pts[k + 1]) / 2 for k in range(n)]
    raise InvalidQueryError(f"{spec.rule.value} is not a Riemann rule")


def riemann(spec: QuadratureSpec) -> float:
    """``delta * sum f(x_k)`` over the sample points of the chosen Riemann rule."""
    sample = _sampler(spec)
    total = 0.0
    for x in riemann_points(spec):
        total += sample(x)
    return spec.partition.delta * total


def riemann_vectorized(spec: QuadratureSpec) -> float:
    """Same as :func:`riemann`, as one vector evaluation and one reduction."""
    xs = np.asarray(riemann_points(spec), dtype=np.float64)
    fx = eval_vec(spec.expr, spec.var, xs)
    bad = np.flatnonzero(~np.isfinite(fx))
    if bad.size:
        x = float(xs[bad[0]])
        raise NonFiniteSampleError(f"integrand is {fx[bad[0]]} at {spec.var}={x!r}", x)
    # sequential prefix sum seeded with 0.0, matching the loop's accumulator
    total = np.add.accumulate(np.concatenate(([0.0], fx)))[-1]
    return spec.partition.delta * float(total)


def trapezoid(spec: QuadratureSpec) -> float:
    sample = _sampler(spec)
    pts = spec.partition.endpoints
    total = sample(pts[0]) / 2
    for x in pts[1:-1]:
        total += sample(x)
    total += sample(pts[-1]) / 2
    return spec.partition.delta * total


def simpson(spec: QuadratureSpec) -> float:
    n = spec.partition.n
    if n % 2:
        raise InvalidQueryError(f"Simpson's rule needs an even n, got {n}")
    sample = _sampler(spec)
    pts = spec.partition.endpoints
    odd = 0.0
    even = 0.0
    for k in range(1, n):
        if k % 2:
            odd += sample(pts[k])
        else:
            even += sample(pts[k])
    return spec.partition.delta / 3 * (sample(pts[0]) + 4 * odd + 2 * even + sample(pts[n]))


def integrate(spec: QuadratureSpec, vectorized: bool = False) -> float:
    """Dispatch on ``spec.rule``. ``vectorized`` only affects Riemann rules."""
    if spec.rule in RIEMANN_RULES:
        return riemann_vectorized(spec) if vectorized else riemann(spec)
    if spec.rule is Rule.TRAPEZOID:
        return trapezoid(spec)
    return simpson(spec)
