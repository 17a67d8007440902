"""Exception types shared across the package."""


class UnfoldingError(Exception):
    """Base class for all package errors."""


class DataError(UnfoldingError):
    """Invalid input data: parse failures, shape mismatches, bad values."""


class NumericalError(UnfoldingError):
    """Numerical failure during fitting (non-finite loss, degenerate weights)."""


class SingularPredictorsError(NumericalError):
    """The predictor cross-product matrix is singular (collinear predictors)."""
