"""Deletion quality metrics and their per-cell aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMetricError

L2_DENOM_TOL = 1e-14
FIT_DENOM_TOL = 1e-12


@dataclass(frozen=True)
class MetricRecord:
    method: str
    trial_seed: int
    l2_ratio: float | None = None
    fit_metric: float | None = None


def l2_metric(theta_approx, theta_lko, theta_full) -> float:
    """``|theta_lko - theta_approx| / |theta_lko - theta_full|``.

    0 is exact deletion, 1 is no better than leaving theta_full untouched.
    """
    denom = float(np.linalg.norm(np.asarray(theta_lko) - np.asarray(theta_full)))
    if denom <= L2_DENOM_TOL:
        raise UndefinedMetricError(
            f"|theta_lko - theta_full| = {denom:.3e}; deletion did not move the model"
        )
    return float(np.linalg.norm(np.asarray(theta_lko) - np.asarray(theta_approx))) / denom


def fit_metric(theta_approx, injected_index: int, w_star: float) -> float:
    """Remaining weight on the injected feature as a fraction of the full model's."""
    if abs(w_star) <= FIT_DENOM_TOL:
        raise UndefinedMetricError(
            "full model put no weight on the injected feature; dataset is invalid for FIT"
        )
    return float(np.asarray(theta_approx)[injected_index]) / float(w_star)


def mean_stderr(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return float("nan"), float("nan")
    se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def median_iqr(values) -> tuple[float, float, float]:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return float("nan"), float("nan"), float("nan")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return float(med), float(q1), float(q3)
