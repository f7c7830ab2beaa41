"""Ridge-regularised logistic regression and its deletion updates.

A Newton step on the cross-entropy loss from theta_full is the solution of a
weighted least-squares problem with IRLS weights ``w_i = h_i (1 - h_i)`` and
working responses ``z = X theta + (y - h) / w``. Deletion on the logistic model
therefore reduces to deletion on that least-squares problem.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy.special import expit, log_expit

from .deletion import DeletionResult, pru_online, woodbury_newton_step
from .errors import NonConvergenceError
from .linear import DEFAULT_HAT_BUDGET_BYTES, Dataset, PrecomputedModel, precompute
from .lko import DeletionRequest

PROB_CLAMP = 1e-12
GRAD_TOL = 1e-10
MAX_ITER = 100


def sigmoid(t):
    return expit(t)


def logistic_loss(X, Y, theta, ridge_lambda) -> float:
    """Negative log-likelihood plus ``0.5 * lambda * |theta|^2``."""
    t = X @ theta
    nll = -(Y @ log_expit(t) + (1.0 - Y) @ log_expit(-t))
    return float(nll + 0.5 * ridge_lambda * theta @ theta)


def logistic_gradient(X, Y, theta, ridge_lambda) -> np.ndarray:
    return X.T @ (sigmoid(X @ theta) - Y) + ridge_lambda * theta


def logistic_hessian(X, theta, ridge_lambda) -> np.ndarray:
    h = sigmoid(X @ theta)
    H = X.T @ ((h * (1.0 - h))[:, None] * X)
    H[np.diag_indices_from(H)] += ridge_lambda
    return H


def _check_labels(Y):
    Y = np.asarray(Y, dtype=np.float64).reshape(-1)
    if not np.all((Y == 0.0) | (Y == 1.0)):
        raise ValueError("labels must be 0 or 1")
    return Y


def fit_logistic(X, Y, ridge_lambda: float, tol: float = GRAD_TOL, max_iter: int = MAX_ITER,
                 theta0=None, return_history: bool = False):
    """Damped Newton with Armijo backtracking.

    Stops when the gradient norm drops to ``tol * (1 + n)``. With
    ``return_history`` the per-iteration losses are returned as well.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = _check_labels(Y)
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be nonnegative")
    n, d = X.shape
    theta = np.zeros(d) if theta0 is None else np.array(theta0, dtype=np.float64)
    target = tol * (1 + n)
    f = logistic_loss(X, Y, theta, ridge_lambda)
    history = [f]
    g = logistic_gradient(X, Y, theta, ridge_lambda)
    for _ in range(max_iter):
        gnorm = np.linalg.norm(g)
        if gnorm <= target:
            return (theta, history) if return_history else theta
        H = logistic_hessian(X, theta, ridge_lambda)
        try:
            step = sla.solve(H, g, assume_a="pos", check_finite=False)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        slope = g @ step
        alpha = 1.0
        while True:
            cand = theta - alpha * step
            f_new = logistic_loss(X, Y, cand, ridge_lambda)
            if f_new <= f - 1e-4 * alpha * slope or alpha < 1e-10:
                break
            alpha *= 0.5
        if f_new > f:
            # rounding floor: the Armijo search cannot make progress
            break
        theta, f = cand, f_new
        history.append(f)
        g = logistic_gradient(X, Y, theta, ridge_lambda)
    gnorm = np.linalg.norm(g)
    if gnorm <= target:
        return (theta, history) if return_history else theta
    raise NonConvergenceError(
        f"logistic fit did not converge in {max_iter} iterations "
        f"(gradient norm {gnorm:.3e}, target {target:.3e})",
        grad_norm=gnorm,
    )


@dataclass(frozen=True)
class LogisticModel:
    """Offline artifacts for logistic deletion.

    ``irls`` is the precomputed weighted least-squares problem on
    ``(X, z_targets, irls_weights, ridge_lambda)``; its hat matrix is the
    weighted hat of the IRLS problem and its inverse Hessian is the inverse of
    the full logistic Hessian at theta_full.
    """

    theta_full: np.ndarray
    labels: np.ndarray
    irls_weights: np.ndarray
    z_targets: np.ndarray
    full_gradient: np.ndarray
    irls: PrecomputedModel

    @property
    def weighted_hat(self) -> np.ndarray:
        return self.irls.hat

    @property
    def inv_hessian(self) -> np.ndarray:
        return self.irls.inv_hessian

    @property
    def features(self) -> np.ndarray:
        return self.irls.dataset.features

    @property
    def ridge_lambda(self) -> float:
        return self.irls.dataset.ridge_lambda

    @property
    def n(self) -> int:
        return self.irls.n

    @property
    def d(self) -> int:
        return self.irls.d


def logistic_precompute(X, Y, theta_full, ridge_lambda,
                        budget_bytes: int = DEFAULT_HAT_BUDGET_BYTES) -> LogisticModel:
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    Y = _check_labels(Y)
    theta_full = np.asarray(theta_full, dtype=np.float64)
    t = X @ theta_full
    # h is clamped so that 1 / w and z stay finite at saturated logits
    h = np.clip(sigmoid(t), PROB_CLAMP, 1.0 - PROB_CLAMP)
    w = h * (1.0 - h)
    z = t + (Y - h) / w
    irls = precompute(Dataset(X, z, weights=w, ridge_lambda=ridge_lambda), budget_bytes)
    return LogisticModel(
        theta_full=theta_full,
        labels=Y,
        irls_weights=w,
        z_targets=z,
        full_gradient=X.T @ (h - Y) + ridge_lambda * theta_full,
        irls=irls,
    )


def _logistic_lko_gradient(model: LogisticModel, idx) -> np.ndarray:
    # grad L^{-k}(theta_full) = grad L^full(theta_full) - sum_deleted (h_i - y_i) x_i
    # and with z_i - x_i.theta = (y_i - h_i) / w_i this is lko_gradient on the
    # IRLS problem evaluated at theta_full.
    Xd = model.features[idx]
    resid = model.z_targets[idx] - Xd @ model.theta_full
    return model.full_gradient + Xd.T @ (model.irls_weights[idx] * resid)


def logistic_newton_delete(model: LogisticModel, req: DeletionRequest) -> DeletionResult:
    """One exact Newton step on the leave-k-out cross-entropy loss from theta_full."""
    req.validate(model.n)
    idx = req.indices
    start = time.perf_counter()
    grad = _logistic_lko_gradient(model, idx)
    step = woodbury_newton_step(
        model.inv_hessian, model.features[idx], model.irls_weights[idx], grad
    )
    theta = model.theta_full - step
    elapsed = time.perf_counter() - start
    return DeletionResult(theta, "newton", elapsed)


def logistic_influence_delete(model: LogisticModel, req: DeletionRequest) -> DeletionResult:
    req.validate(model.n)
    start = time.perf_counter()
    theta = model.theta_full - model.inv_hessian @ _logistic_lko_gradient(model, req.indices)
    elapsed = time.perf_counter() - start
    return DeletionResult(theta, "influence", elapsed)


def logistic_pru_delete(model: LogisticModel, req: DeletionRequest) -> DeletionResult:
    """theta_full plus the projection of the Newton step onto span(deleted x_i)."""
    req.validate(model.n)
    irls = model.irls
    start = time.perf_counter()
    theta = pru_online(
        irls.dataset.features, irls.hat, irls.residuals, model.z_targets,
        model.theta_full, req.indices,
    )
    elapsed = time.perf_counter() - start
    return DeletionResult(theta, "pru", elapsed)


LOGISTIC_METHODS = {
    "newton": logistic_newton_delete,
    "influence": logistic_influence_delete,
    "pru": logistic_pru_delete,
}
