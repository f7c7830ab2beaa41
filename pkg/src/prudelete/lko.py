"""Leave-k-out predictions at the deleted points, straight from the hat matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateLKOError

LEVERAGE_TOL = 1e-12
PIVOT_TOL = 1e-13


@dataclass(frozen=True)
class DeletionRequest:
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp).reshape(-1)
        if idx.size == 0:
            raise ValueError("deletion request is empty")
        if np.unique(idx).size != idx.size:
            raise ValueError("deletion indices must be distinct")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def first(cls, k: int) -> DeletionRequest:
        return cls(np.arange(k))

    @property
    def k(self) -> int:
        return self.indices.size

    def validate(self, n: int) -> None:
        if self.indices.min() < 0 or self.indices.max() >= n:
            raise IndexError(f"deletion indices must lie in [0, {n})")
        if self.k > n - 1:
            raise ValueError(f"cannot delete {self.k} of {n} points; at least one must remain")


def lko_residuals(hat_block: np.ndarray, residuals: np.ndarray) -> np.ndarray:
    """Residuals ``y_i - x_i^T theta^{-k}`` of the leave-k-out fit at the k points.

    ``hat_block`` is H restricted to the deleted rows and columns and
    ``residuals`` the full-fit residuals there. Solves
    ``(1 - h_ii) s_i - sum_{j != i} h_ij s_j = r_i``, i.e.
    ``s = D (I - T)^{-1} r`` with ``D = diag(1 / (1 - h_jj))`` and
    ``T_ij = [i != j] h_ij / (1 - h_jj)``.
    """
    lev = np.diag(hat_block)
    bad = np.flatnonzero(np.abs(1.0 - lev) <= LEVERAGE_TOL)
    if bad.size:
        raise DegenerateLKOError(
            f"leverage h_jj == 1 at request position(s) {bad.tolist()}: deleting them "
            "removes essential support and the leave-k-out fit is ill-posed"
        )
    s, ok = _kernels.ACTIVE.lko_residuals(
        np.ascontiguousarray(hat_block), np.ascontiguousarray(residuals), PIVOT_TOL
    )
    if not ok:
        raise DegenerateLKOError("leave-k-out system I - T is singular")
    return s


def lko_predictions(model, req: DeletionRequest) -> np.ndarray:
    """Predictions of the exactly refit leave-k-out model at the deleted points, O(k^3)."""
    req.validate(model.n)
    idx = req.indices
    s = lko_residuals(model.hat[np.ix_(idx, idx)], model.residuals[idx])
    return model.dataset.responses[idx] - s
