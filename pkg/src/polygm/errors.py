"""Exception types shared across the package."""

from __future__ import annotations


class DimensionError(ValueError):
    """An index or array shape is inconsistent with the model dimension."""


class NonSymmetricMatrixError(ValueError):
    """A matrix that must be symmetric is not."""


class NotPositiveDefiniteError(ValueError):
    """A matrix that must be positive definite is not."""


class IntegrabilityError(ArithmeticError):
    """A density or conditional density is not normalizable."""


class QuadratureAccuracyError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ObjectiveOverflowError(ArithmeticError):
    """An objective term overflowed; carries the offending sample index."""

    def __init__(self, message: str, sample_index: int | None = None):
        super().__init__(message)
        self.sample_index = sample_index
