"""Command-line front end.

Every subcommand prints either aligned ``key  value`` text or, with
``--json``, a single JSON object::

    {"command", "inputs", "verdict" | "error", "value", "iterations", "trace"?}

Exit codes: 0 definitive result, 2 expression parse error, 3 invalid
arguments or failed precondition, 4 inconclusive result.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Sequence, TextIO

from . import __version__
from .descent import DescentConfig, StepMode, Termination, gradient_descent, gradient_descent_momentum
from .diff import DiffRequest, derivative, gradient
from .errors import (
    CalcError,
    GradientError,
    InvalidQueryError,
    NonFiniteSampleError,
    ParseError,
    UnboundVariableError,
)
from .expr import evaluate, free_variables, parse
from .limits import Finite, Infinity, LimitQuery, Side, VerdictKind, check_variable_name, limit
from .quad import RIEMANN_RULES, Partition, QuadratureSpec, Rule, integrate, riemann_points
from .series import SeriesQuery, classify_series, partial_sums

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVALID = 3
EXIT_INCONCLUSIVE = 4

_RULES = {
    "left": Rule.RIEMANN_LEFT,
    "right": Rule.RIEMANN_RIGHT,
    "midpoint": Rule.RIEMANN_MIDPOINT,
    "trapezoid": Rule.TRAPEZOID,
    "simpson": Rule.SIMPSON,
}


class UsageError(CalcError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


# -- argument helpers --------------------------------------------------------


def _number(text: str) -> float:
    """A float literal or a variable-free expression such as ``pi/2``."""
    try:
        return float(text)
    except ValueError:
        pass
    e = parse(text)
    if free_variables(e):
        raise InvalidQueryError(f"expected a number, got {text!r}")
    return evaluate(e, {})


def _assignments(text: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for part in text.split(","):
        name, sep, value = part.partition("=")
        name = name.strip()
        if not sep or not name:
            raise InvalidQueryError(f"expected NAME=VALUE, got {part!r}")
        check_variable_name(name)
        if name in out:
            raise InvalidQueryError(f"variable {name!r} given twice")
        out[name] = _number(value.strip())
    return out


def _names(text: str) -> list[str]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    if not names:
        raise InvalidQueryError("expected a comma-separated list of variable names")
    for name in names:
        check_variable_name(name)
    return names


def _num(v: float | None) -> Any:
    if v is None:
        return None
    if math.isfinite(v):
        return float(v)
    return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")


def _trace_rows(trace, **extra: Any) -> list[dict[str, Any]]:
    return [{**extra, "k": e.k, "x": _num(e.x), "fx": _num(e.fx)} for e in trace]


def _verdict_exit(kind: str) -> int:
    if kind in (VerdictKind.INCONCLUSIVE.value, Termination.MAX_ITERS_REACHED.value,
                Termination.LINE_SEARCH_FAILED.value):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# -- subcommands -------------------------------------------------------------
# Each returns (inputs, verdict, value, iterations, trace_rows, extra_fields).


def _cmd_eval(args: argparse.Namespace, inputs: dict[str, Any]):
    inputs["expr"] = args.expr
    e = parse(args.expr)
    bindings: dict[str, float] = {}
    for item in args.var or []:
        for name, value in _assignments(item).items():
            if name in bindings:
                raise InvalidQueryError(f"variable {name!r} given twice")
            bindings[name] = value
    inputs.update(expr=args.expr, vars={k: _num(v) for k, v in bindings.items()})
    value = evaluate(e, bindings)
    return "value", value, 1, [], {}


def _cmd_limit(args: argparse.Namespace, inputs: dict[str, Any]):
    inputs.update(expr=args.expr, var=args.var)
    e = parse(args.expr)
    check_variable_name(args.var)
    if args.to_infinity is not None:
        target: Finite | Infinity = Infinity(args.to_infinity)
        inputs.update(expr=args.expr, var=args.var, target=target.value)
    else:
        a = _number(args.at)
        target = Finite(a, Side(args.side))
        inputs.update(expr=args.expr, var=args.var, target="finite", at=_num(a), side=args.side)
    q = LimitQuery(e, args.var, target, n=args.n, tol=args.tol, window=args.window,
                   perturb=args.perturb, seed=args.seed)
    inputs.update(n=q.n, tol=q.tol, window=q.window, perturb=q.perturb, seed=q.seed)
    v = limit(q)
    if len(v.traces) == 2:
        rows = _trace_rows(v.traces[0], side="left") + _trace_rows(v.traces[1], side="right")
    else:
        rows = _trace_rows(v.trace)
    return v.kind.value, v.value, v.iterations_used, rows, {}


def _diff_point(args: argparse.Namespace, names: Sequence[str]) -> dict[str, float]:
    if "=" not in args.at:
        if len(names) != 1:
            raise InvalidQueryError("--at needs NAME=VALUE pairs when there are several variables")
        return {names[0]: _number(args.at)}
    return _assignments(args.at)


def _cmd_derivative(args: argparse.Namespace, inputs: dict[str, Any]):
    inputs.update(expr=args.expr, var=args.var)
    e = parse(args.expr)
    check_variable_name(args.var)
    point = _diff_point(args, [args.var])
    req = DiffRequest(e, args.var, point, n=args.n, tol=args.tol)
    inputs.update(expr=args.expr, var=args.var, at={k: _num(v) for k, v in point.items()},
                  n=req.n, tol=req.tol)
    res = derivative(req)
    return res.verdict.kind.value, res.estimate, len(res.trace), _trace_rows(res.trace), {}


def _cmd_gradient(args: argparse.Namespace, inputs: dict[str, Any]):
    inputs.update(expr=args.expr, vars=args.vars)
    e = parse(args.expr)
    names = _names(args.vars)
    point = _diff_point(args, names)
    inputs.update(expr=args.expr, vars=names, at={k: _num(v) for k, v in point.items()},
                  n=args.n, tol=args.tol)
    g = gradient(e, names, point, n=args.n, tol=args.tol)
    rows = []
    for name in names:
        res = derivative(DiffRequest(e, name, point, n=args.n, tol=args.tol))
        rows += _trace_rows(res.trace, var=name)
    return VerdictKind.CONVERGED.value, None, len(rows), rows, {"vector": [_num(c) for c in g]}


def _cmd_minimize(args: argparse.Namespace, inputs: dict[str, Any]):
    inputs.update(expr=args.expr, vars=args.vars)
    e = parse(args.expr)
    names = _names(args.vars)
    x0 = [_number(s.strip()) for s in args.x0.split(",")]
    momentum = args.momentum is not None
    cfg = DescentConfig(
        tuple(x0),
        alpha=args.alpha,
        step_mode=StepMode(args.step),
        beta=args.momentum if momentum else 0.9,
        max_iters=args.max_iters,
        grad_tol=args.grad_tol,
        maximize=args.maximize,
    )
    inputs.update(expr=args.expr, vars=names, x0=[_num(c) for c in cfg.x0], alpha=cfg.alpha,
                  step=cfg.step_mode.value, momentum=cfg.beta if momentum else None,
                  max_iters=cfg.max_iters, grad_tol=cfg.grad_tol, maximize=cfg.maximize)
    run = gradient_descent_momentum if momentum else gradient_descent
    tr = run(e, names, cfg)
    rows = [
        {"k": k, "x": [_num(c) for c in it.x], "fx": _num(it.fx), "grad_norm": _num(it.grad_norm)}
        for k, it in enumerate(tr.iterates)
    ]
    extra = {"vector": [_num(c) for c in tr.final.x], "grad_norm": _num(tr.final.grad_norm)}
    return tr.reason.value, tr.final.fx, tr.iterations, rows, extra


def _cmd_integrate(args: argparse.Namespace, inputs: dict[str, Any]):
    inputs.update(expr=args.expr, var=args.var)
    e = parse(args.expr)
    check_variable_name(args.var)
    a, b = _number(args.a), _number(args.b)
    spec = QuadratureSpec(e, args.var, Partition(a, b, args.n), _RULES[args.rule])
    inputs.update(expr=args.expr, var=args.var, a=_num(a), b=_num(b), n=args.n,
                  rule=spec.rule.value, vectorized=args.vectorized)
    value = integrate(spec, vectorized=args.vectorized)
    pts = riemann_points(spec) if spec.rule in RIEMANN_RULES else spec.partition.endpoints
    rows = [{"k": k, "x": _num(x), "fx": _num(evaluate(e, {args.var: x}))} for k, x in enumerate(pts)]
    return "value", value, args.n, rows, {}


def _cmd_series(args: argparse.Namespace, inputs: dict[str, Any]):
    inputs["term"] = args.term
    e = parse(args.term)
    q = SeriesQuery(e, args.index, start=args.start, max_terms=args.max_terms,
                    checkpoints=args.checkpoints, tol=args.tol, window=args.window)
    inputs.update(term=args.term, index=q.index_var, start=q.start, max_terms=q.max_terms,
                  checkpoints=q.checkpoints, tol=q.tol, window=q.window)
    v = classify_series(q)
    return v.kind.value, v.value, v.iterations_used, _trace_rows(partial_sums(q)), {}


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    for flag, help_ in (("--json", "emit one JSON object"),
                        ("--trace", "include the iteration trace"),
                        ("--quiet", "print only the result")):
        common.add_argument(flag, action="store_true", default=argparse.SUPPRESS, help=help_)

    parser = _Parser(prog="numcalc", description="Numerical limits, derivatives, descent, quadrature and series.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    for flag in ("--json", "--trace", "--quiet"):
        parser.add_argument(flag, action="store_true", default=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("eval", parents=[common], help="evaluate an expression at a point")
    p.add_argument("--expr", required=True)
    p.add_argument("--var", action="append", metavar="NAME=VALUE")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("limit", parents=[common], help="estimate a limit")
    p.add_argument("--expr", required=True)
    p.add_argument("--var", required=True)
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--at")
    where.add_argument("--to-infinity", choices=["plus", "minus"])
    p.add_argument("--side", choices=["left", "right", "both"], default="both")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--perturb", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_limit)

    for name, handler in (("derivative", _cmd_derivative), ("gradient", _cmd_gradient)):
        p = sub.add_parser(name, parents=[common], help=f"forward-difference {name}")
        p.add_argument("--expr", required=True)
        if name == "derivative":
            p.add_argument("--var", required=True)
        else:
            p.add_argument("--vars", required=True)
        p.add_argument("--at", required=True, metavar="x=A[,y=B,...]")
        p.add_argument("--n", type=int, default=8)
        p.add_argument("--tol", type=float, default=1e-5)
        p.set_defaults(handler=handler)

    p = sub.add_parser("minimize", parents=[common], help="gradient descent")
    p.add_argument("--expr", required=True)
    p.add_argument("--vars", required=True)
    p.add_argument("--x0", required=True)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--step", choices=[m.value for m in StepMode], default="fixed")
    p.add_argument("--momentum", type=float, metavar="BETA")
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--grad-tol", type=float, default=1e-6)
    p.add_argument("--maximize", action="store_true")
    p.set_defaults(handler=_cmd_minimize)

    p = sub.add_parser("integrate", parents=[common], help="definite integral")
    p.add_argument("--expr", required=True)
    p.add_argument("--var", required=True)
    p.add_argument("--from", dest="a", required=True)
    p.add_argument("--to", dest="b", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rule", choices=list(_RULES), required=True)
    p.add_argument("--vectorized", action="store_true")
    p.set_defaults(handler=_cmd_integrate)

    p = sub.add_parser("series", parents=[common], help="classify a series from its partial sums")
    p.add_argument("--term", required=True)
    p.add_argument("--index", default="k")
    p.add_argument("--start", type=int, default=1)
    p.add_argument("--max-terms", type=int, default=10000)
    p.add_argument("--checkpoints", type=int, default=30)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--window", type=int, default=3)
    p.set_defaults(handler=_cmd_series)
    return parser


# -- output ------------------------------------------------------------------


def _error_info(exc: BaseException) -> tuple[int, dict[str, Any]]:
    if isinstance(exc, ParseError):
        return EXIT_PARSE, {"code": "parse_error", "message": str(exc), "offset": exc.offset}
    codes = (
        (UsageError, "usage"),
        (UnboundVariableError, "unbound_variable"),
        (NonFiniteSampleError, "non_finite_sample"),
        (GradientError, "gradient_not_converged"),
        (InvalidQueryError, "invalid_argument"),
    )
    for cls, code in codes:
        if isinstance(exc, cls):
            return EXIT_INVALID, {"code": code, "message": str(exc)}
    return EXIT_INVALID, {"code": "invalid_argument", "message": str(exc)}


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(c) for c in v) + "]"
    if isinstance(v, dict):
        return ", ".join(f"{k}={_fmt(c)}" for k, c in v.items())
    if v is None:
        return "-"
    return str(v)


def _write_text(doc: dict[str, Any], out: TextIO, quiet: bool) -> None:
    if quiet:
        if "vector" in doc:
            out.write(_fmt(doc["vector"]) + "\n")
        elif doc.get("value") is not None:
            out.write(_fmt(doc["value"]) + "\n")
        else:
            out.write(str(doc["verdict"]) + "\n")
        return
    rows: list[tuple[str, Any]] = [("command", doc["command"])]
    rows += list(doc["inputs"].items())
    rows += [(k, doc[k]) for k in ("verdict", "value", "vector", "grad_norm", "iterations") if k in doc]
    width = max(len(k) for k, _ in rows)
    for key, value in rows:
        out.write(f"{key.ljust(width)}  {_fmt(value)}\n")
    trace = doc.get("trace")
    if trace:
        cols = list(trace[0])
        out.write("\n" + "  ".join(c.rjust(24) if c not in ("k", "side") else c.rjust(5) for c in cols) + "\n")
        for row in trace:
            out.write("  ".join(
                _fmt(row[c]).rjust(24) if c not in ("k", "side") else _fmt(row[c]).rjust(5) for c in cols
            ) + "\n")


def run(argv: Sequence[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    """Execute one CLI invocation and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    out = stdout if stdout is not None else sys.stdout
    err = stderr if stderr is not None else sys.stderr
    as_json = "--json" in argv
    command = next((a for a in argv if not a.startswith("-")), None)
    inputs: dict[str, Any] = {}
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        verdict, value, iterations, rows, extra = args.handler(args, inputs)
    except CalcError as exc:
        code, info = _error_info(exc)
        doc = {"command": command, "inputs": inputs, "error": info}
        if as_json:
            out.write(json.dumps(doc, allow_nan=False) + "\n")
        else:
            # text mode writes the error to stdout and duplicates it on stderr
            out.write(f"error [{info['code']}]: {info['message']}\n")
            err.write(f"error [{info['code']}]: {info['message']}\n")
        return code
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    doc: dict[str, Any] = {
        "command": command,
        "inputs": inputs,
        "verdict": verdict,
        "value": _num(value),
        "iterations": iterations,
    }
    doc.update(extra)
    if args.trace:
        doc["trace"] = rows
    if args.json:
        out.write(json.dumps(doc, allow_nan=False) + "\n")
    else:
        _write_text(doc, out, args.quiet)
    return _verdict_exit(verdict)


def main() -> None:
    sys.exit(run())
