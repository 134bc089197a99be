"""Exception hierarchy.

Validation failures (bad grids, bad model parameters, mismatched shapes) map
to CLI exit code 2; numerical failures (PSD violations, factorization or
conditioning breakdowns) map to exit code 3.
"""


class SiwsKitError(Exception):
    """Base class for all siws-kit errors."""


class ValidationError(SiwsKitError, ValueError):
    """Invalid arguments, grids, or models."""


class GridError(ValidationError):
    """Invalid grid definition or grid/shape mismatch."""


class ModelError(ValidationError):
    """Invalid model parameters or unsupported model for an operation."""


class NumericalError(SiwsKitError, RuntimeError):
    """Numerical failure (conditioning, factorization, PSD violation)."""


class PsdError(NumericalError):
    """Covariance failed the positive-semidefiniteness check."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class QuadratureWarning(RuntimeWarning):
    """Quadrature grid looks under-resolved or truncates mass at its edges."""
