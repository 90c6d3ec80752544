"""numcalc: numerical limits, finite differences, gradient descent, quadrature and series."""

from .descent import DescentConfig, DescentTrace, StepMode, Termination, gradient_descent, gradient_descent_momentum
from .diff import DerivativeResult, DiffRequest, derivative, diff_quotient_trace, gradient, partial
from .errors import (
    CalcError,
    GradientError,
    InvalidQueryError,
    NonFiniteSampleError,
    ParseError,
    UnboundVariableError,
    UnknownFunctionError,
)
from .expr import evaluate, eval_vec, format_expr, free_variables, parse
from .limits import (
    Finite,
    Infinity,
    LimitQuery,
    LimitVerdict,
    SampleTrace,
    Side,
    VerdictKind,
    classify,
    limit,
    sample_at_infinity,
    sample_one_sided,
)
from .quad import Partition, QuadratureSpec, Rule, riemann, riemann_vectorized, simpson, trapezoid
from .series import SeriesQuery, classify_series, partial_sums

__version__ = "0.1.0"
