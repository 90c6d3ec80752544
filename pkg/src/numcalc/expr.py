"""Expression front end: parse text into an immutable AST and evaluate it.

Grammar (standard precedence, ``^`` right-associative and binding tighter
than unary minus)::

    expr    := term (("+"|"-") term)*
    term    := factor (("*"|"/") factor)*
    factor  := "-" factor | power
    power   := atom ("^" factor)?
    atom    := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

All arithmetic is binary64. Evaluation never raises on domain problems:
``ln(-1)`` is NaN, ``1/0`` is +inf, and so on.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union

import numpy as np

from .errors import ParseError, UnboundVariableError, UnknownFunctionError, InvalidQueryError

__all__ = [
    "Expr",
    "Constant",
    "Variable",
    "Unary",
    "Binary",
    "Call",
    "FUNCTIONS",
    "CONSTANTS",
    "parse",
    "format_expr",
    "free_variables",
    "evaluate",
    "eval_vec",
    "compile_scalar",
]

_NAN = float("nan")
_INF = float("inf")


# -- total scalar primitives -------------------------------------------------


def _div(a: float, b: float) -> float:
    if b == 0.0:
        if a == 0.0 or a != a:
            return _NAN
        return math.copysign(_INF, a) * math.copysign(1.0, b)
    return a / b


def _is_odd_integer(y: float) -> bool:
    return math.isfinite(y) and y == math.floor(y) and math.fmod(y, 2.0) != 0.0


def _pow(a: float, b: float) -> float:
    # math.pow handles negative bases with integral exponents exactly, so
    # (-1)^k is +-1 while (-8)^(1/3) falls into the ValueError branch (NaN).
    try:
        return math.pow(a, b)
    except OverflowError:
        if a < 0.0 and _is_odd_integer(b):
            return -_INF
        return _INF
    except ValueError:
        if a == 0.0 and b < 0.0:
            if math.copysign(1.0, a) < 0.0 and _is_odd_integer(b):
                return -_INF
            return _INF
        return _NAN


def _guard(fn: Callable[[float], float], at_zero: float | None = None) -> Callable[[float], float]:
    def total(x: float) -> float:
        if at_zero is not None and x == 0.0:
            return at_zero
        try:
            return fn(x)
        except OverflowError:
            return _INF
        except ValueError:
            return _NAN

    total.__name__ = getattr(fn, "__name__", "fn")
    return total


FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": _guard(math.sin),
    "cos": _guard(math.cos),
    "tan": _guard(math.tan),
    "exp": _guard(math.exp),
    "ln": _guard(math.log, at_zero=-_INF),
    "log10": _guard(math.log10, at_zero=-_INF),
    "sqrt": _guard(math.sqrt),
    "abs": _guard(math.fabs),
    "atan": _guard(math.atan),
}

CONSTANTS: dict[str, float] = {"pi": math.pi, "e": math.e}

_BINARY_OPS: dict[str, Callable[[float, float], float]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "^": _pow,
}


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    value: float
    name: str | None = None


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Unary:
    child: "Expr"
    op: str = "-"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self) -> None:
        if self.op not in _BINARY_OPS:
            raise ValueError(f"unknown binary operator {self.op!r}")


@dataclass(frozen=True)
class Call:
    fn: str
    child: "Expr"

    def __post_init__(self) -> None:
        if self.fn not in FUNCTIONS:
            raise ValueError(f"unknown function {self.fn!r}")


Expr = Union[Constant, Variable, Unary, Binary, Call]


def free_variables(e: Expr) -> frozenset[str]:
    if isinstance(e, Variable):
        return frozenset((e.name,))
    if isinstance(e, Constant):
        return frozenset()
    if isinstance(e, Binary):
        return free_variables(e.left) | free_variables(e.right)
    return free_variables(e.child)


# -- tokenizer and parser ----------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def _advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _at_op(self, *ops: str) -> bool:
        kind, value, _ = self.tok
        return kind == "op" and value in ops

    def _fail(self, what: str) -> ParseError:
        kind, value, pos = self.tok
        found = "end of input" if kind == "end" else repr(value)
        return ParseError(f"expected {what}, found {found}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok[0] != "end":
            kind, value, pos = self.tok
            if kind in ("num", "ident") or value == "(":
                raise ParseError(
                    f"unexpected {value!r}; implicit multiplication is not allowed", pos
                )
            raise ParseError(f"unexpected {value!r}", pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self._at_op("+", "-"):
            op = self._advance()[1]
            e = Binary(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self._at_op("*", "/"):
            op = self._advance()[1]
            e = Binary(op, e, self.factor())
        return e

    def factor(self) -> Expr:
        if self._at_op("-"):
            self._advance()
            return Unary(self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self._at_op("^"):
            self._advance()
            return Binary("^", base, self.factor())
        return base

    def atom(self) -> Expr:
        kind, value, pos = self.tok
        if kind == "num":
            self._advance()
            return Constant(float(value))
        if kind == "ident":
            self._advance()
            if self._at_op("("):
                if value not in FUNCTIONS:
                    hint = "; use ln or log10" if value == "log" else ""
                    raise UnknownFunctionError(f"unknown function {value!r}{hint}", pos)
                self._advance()
                arg = self.expr()
                if not self._at_op(")"):
                    raise self._fail("')'")
                self._advance()
                return Call(value, arg)
            if value in FUNCTIONS:
                raise ParseError(f"function {value!r} must be called with '('", pos)
            if value in CONSTANTS:
                return Constant(CONSTANTS[value], value)
            return Variable(value)
        if self._at_op("("):
            self._advance()
            e = self.expr()
            if not self._at_op(")"):
                raise self._fail("')'")
            self._advance()
            return e
        raise self._fail("a number, name, or '('")


def parse(text: str) -> Expr:
    """Parse ``text`` into an :data:`Expr`.

    Raises :class:`ParseError` (with a character offset) on malformed input
    and :class:`UnknownFunctionError` for calls to unsupported functions.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text).parse()


# -- formatting --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary):
        return _PREC["neg"]
    if isinstance(e, Constant) and e.name is None and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return _PREC["neg"]
    return _PREC["atom"]


def _format_number(v: float) -> str:
    if math.isnan(v):
        raise ValueError("NaN constants cannot be formatted")
    if math.isinf(v):
        return "1e999" if v > 0 else "-1e999"
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v)) if v != 0 or math.copysign(1.0, v) > 0 else "-0"
    return repr(v)


def format_expr(e: Expr) -> str:
    """Render ``e`` as text that parses back to a structurally equal tree."""
    if isinstance(e, Constant):
        return e.name if e.name is not None else _format_number(e.value)
    if isinstance(e, Variable):
        return e.name
    if isinstance(e, Call):
        return f"{e.fn}({format_expr(e.child)})"
    if isinstance(e, Unary):
        return "-" + _wrap(e.child, _prec(e.child) < _PREC["neg"])
    p = _PREC[e.op]
    if e.op == "^":
        left = _wrap(e.left, _prec(e.left) < _PREC["atom"])
        right = _wrap(e.right, _prec(e.right) < _PREC["neg"])
        return f"{left}^{right}"
    left = _wrap(e.left, _prec(e.left) < p)
    right = _wrap(e.right, _prec(e.right) <= p)
    return f"{left} {e.op} {right}"


def _wrap(e: Expr, paren: bool) -> str:
    s = format_expr(e)
    return f"({s})" if paren else s


# -- evaluation --------------------------------------------------------------


def compile_scalar(e: Expr) -> Callable[[Mapping[str, float]], float]:
    """Turn ``e`` into a closure over a bindings mapping.

    Used by the samplers, which evaluate one tree thousands of times. Any NaN
    result comes back as the canonical positive quiet NaN; IEEE 754 leaves
    the sign of a propagated NaN unspecified, and numpy and libm disagree.
    """
    inner = _compile(e)

    def run(b: Mapping[str, float]) -> float:
        y = inner(b)
        return y if y == y else math.nan

    return run


def _compile(e: Expr) -> Callable[[Mapping[str, float]], float]:
    if isinstance(e, Constant):
        value = float(e.value)
        return lambda b: value
    if isinstance(e, Variable):
        name = e.name

        def lookup(b: Mapping[str, float]) -> float:
            try:
                return float(b[name])
            except KeyError:
                raise UnboundVariableError(name) from None

        return lookup
    if isinstance(e, Unary):
        child = _compile(e.child)
        return lambda b: -child(b)
    if isinstance(e, Call):
        fn = FUNCTIONS[e.fn]
        child = _compile(e.child)
        return lambda b: fn(child(b))
    op = _BINARY_OPS[e.op]
    left = _compile(e.left)
    right = _compile(e.right)
    return lambda b: op(left(b), right(b))


def evaluate(e: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate ``e`` at a point. Only an unbound variable raises."""
    return compile_scalar(e)(bindings)


def _vec(e: Expr, var: str, xs: np.ndarray) -> np.ndarray:
    if isinstance(e, Constant):
        return np.full(xs.shape, float(e.value))
    if isinstance(e, Variable):
        if e.name != var:
            raise UnboundVariableError(e.name)
        return xs
    if isinstance(e, Unary):
        return np.negative(_vec(e.child, var, xs))
    if isinstance(e, Call):
        return _ufuncs()[e.fn](_vec(e.child, var, xs)).astype(np.float64)
    a = _vec(e.left, var, xs)
    b = _vec(e.right, var, xs)
    if e.op == "+":
        return np.add(a, b)
    if e.op == "-":
        return np.subtract(a, b)
    if e.op == "*":
        return np.multiply(a, b)
    if e.op == "/":
        zero = b == 0.0
        out = np.divide(a, np.where(zero, 1.0, b))
        if zero.any():
            out[zero] = [_div(x, y) for x, y in zip(a[zero].tolist(), b[zero].tolist())]
        return out
    return _POW_UFUNC(a, b).astype(np.float64)


_POW_UFUNC = np.frompyfunc(_pow, 2, 1)
_UFUNC_CACHE: dict[str, np.ufunc] = {}


def _ufuncs() -> dict[str, np.ufunc]:
    # Transcendentals run the scalar libm routine lane by lane: numpy's SIMD
    # kernels may differ from libm in the last ulp, which would break the
    # scalar/vector bit-equality contract.
    if not _UFUNC_CACHE:
        _UFUNC_CACHE.update({k: np.frompyfunc(fn, 1, 1) for k, fn in FUNCTIONS.items()})
    return _UFUNC_CACHE


def eval_vec(e: Expr, var: str, xs: Iterable[float]) -> np.ndarray:
    """Evaluate univariate ``e`` over a vector of values of ``var``.

    Element ``i`` is bit-identical to ``evaluate(e, {var: xs[i]})``.
    """
    free = free_variables(e)
    if not free <= {var}:
        raise InvalidQueryError(
            f"eval_vec needs an expression in {var!r} only; free variables are {sorted(free)}"
        )
    arr = np.asarray(xs, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidQueryError("eval_vec expects a one-dimensional vector")
    with np.errstate(all="ignore"):
        out = np.array(_vec(e, var, arr), dtype=np.float64, copy=True)
    out[np.isnan(out)] = np.nan
    return out
