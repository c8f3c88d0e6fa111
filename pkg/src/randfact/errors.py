"""Exception hierarchy shared by the library and the command-line tool."""


class RandfactError(Exception):
    """Base class for all errors raised by randfact."""

    exit_code = 1
    code = "error"


class ParameterError(RandfactError, ValueError):
    """Invalid dimensions, ranks, tolerances or other arguments."""

    exit_code = 3
    code = "parameter_error"


class NumericalError(RandfactError, ArithmeticError):
    """A factorization could not be completed in floating point."""

    exit_code = 4
    code = "numerical_failure"


class NotPositiveDefiniteError(NumericalError):
    code = "not_positive_definite"


class ConvergenceError(NumericalError):
    code = "no_convergence"


class SinglePassViolation(RandfactError, RuntimeError):
    """A MatrixStream was traversed a second time."""

    exit_code = 4
    code = "single_pass_violation"


class MatrixParseError(RandfactError):
    exit_code = 2
    code = "parse_error"
