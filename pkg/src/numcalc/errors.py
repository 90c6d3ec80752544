"""Exception hierarchy shared by every numcalc module."""

from __future__ import annotations


class CalcError(Exception):
    """Base class for all numcalc failures."""


class ParseError(CalcError, ValueError):
    """Malformed expression text. ``offset`` is the 0-based character index."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (at offset {offset})")
        self.reason = message
        self.offset = offset


class UnknownFunctionError(ParseError):
    pass


class UnboundVariableError(CalcError, LookupError):
    def __init__(self, name: str) -> None:
        super().__init__(f"variable {name!r} is not bound")
        self.name = name

    def __str__(self) -> str:
        return self.args[0]


class InvalidQueryError(CalcError, ValueError):
    """A query or configuration violates its preconditions."""


class NonFiniteSampleError(CalcError, ArithmeticError):
    """An integrand or series term evaluated to inf or NaN."""

    def __init__(self, message: str, where: float) -> None:
        super().__init__(message)
        self.where = where


class GradientError(CalcError):
    """A gradient component's difference quotients did not converge."""

    def __init__(self, variable: str, point: dict[str, float], verdict: str) -> None:
        super().__init__(
            f"partial derivative along {variable!r} did not converge at {point} ({verdict})"
        )
        self.variable = variable
        self.point = point
        self.verdict = verdict
