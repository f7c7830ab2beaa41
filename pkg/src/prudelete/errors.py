"""Exception types raised by the library."""

import numpy as np


class RankDeficientError(np.linalg.LinAlgError):
    """The regularised normal matrix is singular (lambda = 0 with rank-deficient X)."""


class SingularDowndateError(np.linalg.LinAlgError):
    """Removing the requested rows leaves a singular Hessian."""


class DegenerateLKOError(np.linalg.LinAlgError):
    """Leave-k-out residual system is ill-posed (h_jj == 1 or I - T singular)."""


class NonConvergenceError(RuntimeError):
    def __init__(self, message, grad_norm=float("nan")):
        super().__init__(message)
        self.grad_norm = grad_norm


class UndefinedMetricError(ValueError):
    """Metric denominator is (numerically) zero."""


class GenerationError(RuntimeError):
    """Synthetic data generation exhausted its retry budget."""


class MemoryBudgetError(MemoryError):
    """Dense hat matrix would exceed the configured memory budget."""
