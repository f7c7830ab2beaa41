"""Weighted ridge least squares and the offline artifacts used for deletion."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg as sla

from .errors import MemoryBudgetError, RankDeficientError

# 3 GiB of float64 hat entries
DEFAULT_HAT_BUDGET_BYTES = 3 * 1024**3
RANK_TOL = 1e-14


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    responses: np.ndarray
    weights: np.ndarray | None = None
    ridge_lambda: float = 0.1

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        Y = np.asarray(self.responses, dtype=np.float64).reshape(-1)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("features must be a non-empty n x d matrix")
        if Y.shape[0] != X.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but {Y.shape[0]} responses")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be nonnegative")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "responses", Y)
        object.__setattr__(self, "ridge_lambda", float(self.ridge_lambda))
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
            if w.shape[0] != X.shape[0]:
                raise ValueError("weights length does not match number of rows")
            if not np.all(w > 0):
                raise ValueError("weights must be strictly positive")
            object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def weight_vector(self) -> np.ndarray:
        return np.ones(self.n) if self.weights is None else self.weights


@dataclass(frozen=True)
class PrecomputedModel:
    """Everything a deletion request is allowed to touch, computed ahead of time.

    ``full_gradient`` is the regularised loss gradient at ``theta_full``; it is
    zero up to rounding for an exact fit but is kept so that a Newton step
    from a slightly unconverged point stays exact.
    """

    theta_full: np.ndarray
    hat: np.ndarray
    inv_hessian: np.ndarray
    residuals: np.ndarray
    dataset: Dataset
    full_gradient: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.full_gradient is None:
            object.__setattr__(self, "full_gradient", np.zeros_like(self.theta_full))

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def d(self) -> int:
        return self.dataset.d


def _normal_matrix(data: Dataset) -> np.ndarray:
    X = data.features
    w = data.weight_vector()
    A = X.T @ (w[:, None] * X)
    A[np.diag_indices_from(A)] += data.ridge_lambda
    return A


def _cholesky(A: np.ndarray):
    try:
        c, low = sla.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientError(
            "normal matrix X^T W X + lambda I is not positive definite; "
            "X is rank deficient (use ridge_lambda > 0)"
        ) from exc
    diag = np.abs(np.diag(c))
    if diag.min() ** 2 <= RANK_TOL * diag.max() ** 2:
        raise RankDeficientError(
            "normal matrix X^T W X + lambda I is numerically singular; "
            "X is rank deficient (use ridge_lambda > 0)"
        )
    return c, low


def loss_gradient(data: Dataset, theta: np.ndarray) -> np.ndarray:
    """Gradient of 0.5 * [sum w_i (x_i.theta - y_i)^2 + lambda |theta|^2]."""
    w = data.weight_vector()
    resid = data.features @ theta - data.responses
    return data.features.T @ (w * resid) + data.ridge_lambda * theta


def loss(data: Dataset, theta: np.ndarray) -> float:
    w = data.weight_vector()
    resid = data.features @ theta - data.responses
    return 0.5 * float(w @ resid**2 + data.ridge_lambda * theta @ theta)


def fit_ridge(data: Dataset) -> np.ndarray:
    """``(X^T W X + lambda I)^{-1} X^T W Y`` via a Cholesky solve."""
    factor = _cholesky(_normal_matrix(data))
    rhs = data.features.T @ (data.weight_vector() * data.responses)
    return sla.cho_solve(factor, rhs, check_finite=False)


def check_hat_budget(n: int, budget_bytes: int = DEFAULT_HAT_BUDGET_BYTES) -> None:
    need = 8 * n * n
    if need > budget_bytes:
        raise MemoryBudgetError(
            f"dense hat matrix for n={n} needs {need / 1024**3:.2f} GiB, "
            f"over the {budget_bytes / 1024**3:.2f} GiB budget"
        )


def hat_matrix(data: Dataset, budget_bytes: int = DEFAULT_HAT_BUDGET_BYTES) -> np.ndarray:
    """``X (X^T W X + lambda I)^{-1} X^T W``."""
    check_hat_budget(data.n, budget_bytes)
    c, low = _cholesky(_normal_matrix(data))
    G = sla.solve_triangular(c, data.features.T, lower=low, check_finite=False)
    H = G.T @ G
    if data.weights is not None:
        H *= data.weights[None, :]
    return H


def precompute(data: Dataset, budget_bytes: int = DEFAULT_HAT_BUDGET_BYTES) -> PrecomputedModel:
    check_hat_budget(data.n, budget_bytes)
    c, low = _cholesky(_normal_matrix(data))
    X = data.features
    w = data.weight_vector()
    theta = sla.cho_solve((c, low), X.T @ (w * data.responses), check_finite=False)
    inv_h = sla.cho_solve((c, low), np.eye(data.d), check_finite=False)
    inv_h = 0.5 * (inv_h + inv_h.T)
    G = sla.solve_triangular(c, X.T, lower=low, check_finite=False)
    H = G.T @ G
    del G
    if data.weights is not None:
        H *= data.weights[None, :]
    return PrecomputedModel(
        theta_full=theta,
        hat=H,
        inv_hessian=inv_h,
        residuals=data.responses - X @ theta,
        dataset=data,
        full_gradient=loss_gradient(data, theta),
    )


# -- serialisation ------------------------------------------------------------


def save_csv(data: Dataset, path) -> None:
    """Rows are points, the last column is the response. %.17g round-trips doubles."""
    table = np.column_stack([data.features, data.responses])
    np.savetxt(path, table, delimiter=",", fmt="%.17g")


def load_csv(path, ridge_lambda: float = 0.1, weights=None) -> Dataset:
    table = np.loadtxt(path, delimiter=",", ndmin=2)
    if table.shape[1] < 2:
        raise ValueError("CSV needs at least one feature column and a response column")
    return Dataset(table[:, :-1], table[:, -1], weights=weights, ridge_lambda=ridge_lambda)


def save_snapshot(model: PrecomputedModel, path) -> None:
    data = model.dataset
    arrays = dict(
        theta_full=model.theta_full,
        hat=model.hat,
        inv_hessian=model.inv_hessian,
        residuals=model.residuals,
        full_gradient=model.full_gradient,
        features=data.features,
        responses=data.responses,
        ridge_lambda=np.float64(data.ridge_lambda),
    )
    if data.weights is not None:
        arrays["weights"] = data.weights
    with open(Path(path), "wb") as fh:
        np.savez(fh, **arrays)


def load_snapshot(path) -> PrecomputedModel:
    with np.load(Path(path)) as z:
        data = Dataset(
            z["features"],
            z["responses"],
            weights=z["weights"] if "weights" in z.files else None,
            ridge_lambda=float(z["ridge_lambda"]),
        )
        return PrecomputedModel(
            theta_full=z["theta_full"],
            hat=z["hat"],
            inv_hessian=z["inv_hessian"],
            residuals=z["residuals"],
            dataset=data,
            full_gradient=z["full_gradient"],
        )
