"""Exception hierarchy shared across the package.

ValidationError covers bad inputs (files, columns, shapes, parameter ranges);
NumericalError covers failures of the numerical procedures themselves.  The
CLI maps them to exit codes 2 and 1 respectively.
"""


class ValidationError(ValueError):
    """Invalid input data or configuration."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to produce a usable result."""


class BracketFailure(NumericalError):
    """Root bracketing failed; typically the kernel window is one-sided."""


class ExtrapolationError(NumericalError):
    """Evaluation point lies outside every kernel window."""
