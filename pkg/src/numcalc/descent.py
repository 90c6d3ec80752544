"""Gradient descent (and ascent) with fixed or backtracking step, plus heavy-ball momentum.

Gradients come from :func:`numcalc.diff.gradient`, i.e. forward differences,
so a recorded ``grad_norm`` is the norm of the *estimated* gradient.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .diff import gradient
from .errors import GradientError, InvalidQueryError
from .expr import Expr, compile_scalar, free_variables

DIVERGENCE_BOUND = 1e300
MAX_HALVINGS = 30
# consecutive objective increases that mark a runaway iterate sequence
RUNAWAY_STEPS = 3


class StepMode(str, enum.Enum):
    FIXED = "fixed"
    BACKTRACKING = "backtracking"


class Termination(str, enum.Enum):
    GRADIENT_TOLERANCE_MET = "gradient_tolerance_met"
    MAX_ITERS_REACHED = "max_iters_reached"
    DIVERGED = "diverged"
    LINE_SEARCH_FAILED = "line_search_failed"


@dataclass(frozen=True)
class DescentConfig:
    x0: tuple[float, ...]
    alpha: float = 0.1
    step_mode: StepMode = StepMode.FIXED
    beta: float = 0.9
    max_iters: int = 1000
    grad_tol: float = 1e-6
    maximize: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))
        object.__setattr__(self, "step_mode", StepMode(self.step_mode))
        if not self.alpha > 0:
            raise InvalidQueryError("alpha must be positive")
        if not 0.0 <= self.beta < 1.0:
            raise InvalidQueryError("beta must lie in [0, 1)")
        if self.max_iters < 1:
            raise InvalidQueryError("max_iters must be at least 1")
        if not self.grad_tol > 0:
            raise InvalidQueryError("grad_tol must be positive")


class Iterate(NamedTuple):
    x: tuple[float, ...]
    fx: float
    grad_norm: float


@dataclass(frozen=True)
class DescentTrace:
    iterates: tuple[Iterate, ...]
    reason: Termination
    alphas: tuple[float, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.iterates)

    @property
    def final(self) -> Iterate:
        return self.iterates[-1]

    @property
    def iterations(self) -> int:
        """Number of update steps taken."""
        return len(self.iterates) - 1


def _check(f: Expr, vars: Sequence[str], cfg: DescentConfig) -> None:
    if len(cfg.x0) != len(vars):
        raise InvalidQueryError(f"x0 has {len(cfg.x0)} coordinates but {len(vars)} variables were given")
    if len(set(vars)) != len(vars):
        raise InvalidQueryError("variable names must be distinct")
    extra = free_variables(f) - set(vars)
    if extra:
        raise InvalidQueryError(f"expression uses variables not being optimized: {sorted(extra)}")


def _runaway(history: list[Iterate], sign: float) -> bool:
    if len(history) < RUNAWAY_STEPS + 1:
        return False
    tail = [sign * it.fx for it in history[-(RUNAWAY_STEPS + 1):]]
    return all(tail[i + 1] > tail[i] for i in range(RUNAWAY_STEPS))


def _descend(f: Expr, vars: Sequence[str], cfg: DescentConfig, beta: float | None) -> DescentTrace:
    _check(f, vars, cfg)
    fn = compile_scalar(f)
    # minimizing f, or maximizing it by minimizing -f
    sign = -1.0 if cfg.maximize else 1.0

    def objective(x: Sequence[float]) -> float:
        return fn(dict(zip(vars, x)))

    x = cfg.x0
    v = [0.0] * len(x)
    history: list[Iterate] = []
    alphas: list[float] = []
    fx = objective(x)
    for it in range(cfg.max_iters + 1):
        if not all(math.isfinite(c) for c in x) or not math.isfinite(fx) or abs(fx) > DIVERGENCE_BOUND:
            history.append(Iterate(x, fx, math.nan))
            return DescentTrace(tuple(history), Termination.DIVERGED, tuple(alphas))
        try:
            grad = gradient(f, vars, dict(zip(vars, x)))
        except GradientError:
            # forward differences break down once the iterate has run far
            # away; an objective that kept getting worse is a divergence
            if _runaway(history + [Iterate(x, fx, math.nan)], sign):
                history.append(Iterate(x, fx, math.nan))
                return DescentTrace(tuple(history), Termination.DIVERGED, tuple(alphas))
            raise
        g = [sign * c for c in grad]
        history.append(Iterate(x, fx, math.hypot(*grad)))
        if history[-1].grad_norm <= cfg.grad_tol:
            return DescentTrace(tuple(history), Termination.GRADIENT_TOLERANCE_MET, tuple(alphas))
        if it == cfg.max_iters:
            break
        if beta is None:
            direction = g
        else:
            v = [beta * vi + gi for vi, gi in zip(v, g)]
            direction = v
        alpha = cfg.alpha
        x_new = tuple(xi - alpha * di for xi, di in zip(x, direction))
        f_new = objective(x_new)
        if cfg.step_mode is StepMode.BACKTRACKING:
            halvings = 0
            while not sign * f_new < sign * fx:
                if halvings == MAX_HALVINGS:
                    return DescentTrace(tuple(history), Termination.LINE_SEARCH_FAILED, tuple(alphas))
                alpha *= 0.5
                halvings += 1
                x_new = tuple(xi - alpha * di for xi, di in zip(x, direction))
                f_new = objective(x_new)
        alphas.append(alpha)
        x, fx = x_new, f_new
    return DescentTrace(tuple(history), Termination.MAX_ITERS_REACHED, tuple(alphas))


def gradient_descent(f: Expr, vars: Sequence[str], cfg: DescentConfig) -> DescentTrace:
    """Plain descent ``x <- x - alpha * grad f(x)`` (ascent when ``cfg.maximize``).

    In backtracking mode each step starts at ``cfg.alpha`` and is halved, at
    most 30 times, until the objective strictly improves.
    """
    return _descend(f, vars, cfg, None)


def gradient_descent_momentum(f: Expr, vars: Sequence[str], cfg: DescentConfig) -> DescentTrace:
    """Heavy-ball momentum: ``v <- beta*v + grad f(x)``, ``x <- x - alpha*v``, ``v0 = 0``."""
    return _descend(f, vars, cfg, cfg.beta)
