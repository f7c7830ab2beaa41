"""Fast approximate data deletion for ridge and logistic regression."""

from ._kernels import ACTIVE as _ACTIVE
from ._version import __version__
from .deletion import (
    METHODS,
    DeletionResult,
    exact_delete,
    influence_delete,
    lko_gradient,
    projective_update,
    pru_delete,
)
from .errors import (
    DegenerateLKOError,
    GenerationError,
    MemoryBudgetError,
    NonConvergenceError,
    RankDeficientError,
    SingularDowndateError,
    UndefinedMetricError,
)
from .linear import (
    Dataset,
    PrecomputedModel,
    fit_ridge,
    hat_matrix,
    load_csv,
    load_snapshot,
    precompute,
    save_csv,
    save_snapshot,
)
from .lko import DeletionRequest, lko_predictions, lko_residuals
from .logistic import (
    LOGISTIC_METHODS,
    LogisticModel,
    fit_logistic,
    logistic_influence_delete,
    logistic_newton_delete,
    logistic_precompute,
    logistic_pru_delete,
)
from .lowrank import LowRankPinv, OrthoFactorization, fast_mult, gram_schmidt, pseudo_inv
from .metrics import MetricRecord, fit_metric, l2_metric

BACKEND = _ACTIVE.name

__all__ = [
    "__version__",
    "BACKEND",
    "METHODS",
    "LOGISTIC_METHODS",
    "Dataset",
    "DeletionRequest",
    "DeletionResult",
    "DegenerateLKOError",
    "GenerationError",
    "LogisticModel",
    "LowRankPinv",
    "MemoryBudgetError",
    "MetricRecord",
    "NonConvergenceError",
    "OrthoFactorization",
    "PrecomputedModel",
    "RankDeficientError",
    "SingularDowndateError",
    "UndefinedMetricError",
    "exact_delete",
    "fast_mult",
    "fit_logistic",
    "fit_metric",
    "fit_ridge",
    "gram_schmidt",
    "hat_matrix",
    "influence_delete",
    "l2_metric",
    "lko_gradient",
    "lko_predictions",
    "lko_residuals",
    "load_csv",
    "load_snapshot",
    "logistic_influence_delete",
    "logistic_newton_delete",
    "logistic_precompute",
    "logistic_pru_delete",
    "precompute",
    "projective_update",
    "pru_delete",
    "pseudo_inv",
    "save_csv",
    "save_snapshot",
]
