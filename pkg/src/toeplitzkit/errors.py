"""Exception hierarchy shared by the library and the command line.

Each error class carries the process exit code the CLI reports for it.
"""


class ToeplitzKitError(Exception):
    exit_code = 3


class ParameterError(ToeplitzKitError, ValueError):
    """A parameter lies outside the documented precondition."""

    exit_code = 2


class DomainError(ParameterError):
    """A point lies outside the domain of the space (e.g. |z| >= 1 in the ball)."""


class CoverageError(ToeplitzKitError):
    """A partition of unity has an uncovered sample point."""


class NumericalError(ToeplitzKitError, ArithmeticError):
    """A numerical procedure failed its own convergence check."""

    exit_code = 3


class SchemaError(ToeplitzKitError):
    """A serialized document does not conform to its schema."""

    exit_code = 2


class TruncationWarning(UserWarning):
    """The degree-N truncation is probably not resolving the requested object."""
