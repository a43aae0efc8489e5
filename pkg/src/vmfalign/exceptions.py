"""Exception hierarchy shared by all vmfalign modules."""


class AlignmentError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(AlignmentError, ValueError):
    """Invalid input: wrong values, non-finite entries, inconsistent data."""


class DimensionError(ValidationError):
    """Matrix shapes do not conform to the requested operation."""


class ExistenceConditionError(ValidationError):
    """Too few subjects for the two-stage covariance estimator to exist."""


class NumericError(AlignmentError, ArithmeticError):
    """A numerical routine failed (non-convergence, singular factor, ...)."""


class DegenerateProblemError(NumericError):
    """The problem instance is degenerate (zero residuals, zero variance, ...)."""


class ParseError(AlignmentError, ValueError):
    """A matrix file could not be parsed; message carries line/offset info."""
