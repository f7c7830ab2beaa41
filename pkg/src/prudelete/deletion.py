"""Deletion strategies for ridge regression.

Each strategy reads only the :class:`PrecomputedModel` and the rows being
deleted. ``online_seconds`` covers the numerical update only; request
validation and result packaging sit outside the timed region.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateLKOError, NonConvergenceError, SingularDowndateError
from .linear import PrecomputedModel
from .lko import LEVERAGE_TOL, PIVOT_TOL, DeletionRequest
from .lowrank import DROP_TOL, EIG_ZERO_TOL, JACOBI_MAX_SWEEPS, JACOBI_TOL, fast_mult, pseudo_inv

DOWNDATE_PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class DeletionResult:
    theta: np.ndarray
    method: str
    online_seconds: float


def lko_gradient(model: PrecomputedModel, idx: np.ndarray) -> np.ndarray:
    """Gradient of the leave-k-out loss at theta_full.

    Equals the full gradient (zero at an exact fit) plus
    ``sum_{deleted} w_i r_i x_i``.
    """
    Xd = model.dataset.features[idx]
    wr = model.residuals[idx]
    if model.dataset.weights is not None:
        wr = wr * model.dataset.weights[idx]
    return model.full_gradient + Xd.T @ wr


def woodbury_newton_step(inv_hessian, Xd, wd, grad):
    """``(H - Xd^T W_d Xd)^{-1} grad`` given ``H^{-1}``, via a k x k capacitance solve."""
    a = inv_hessian @ grad
    P = inv_hessian @ Xd.T
    cap = np.eye(Xd.shape[0]) - wd[:, None] * (Xd @ P)
    z, ok = _kernels.ACTIVE.solve_pivoted(cap, wd * (Xd @ a), DOWNDATE_PIVOT_TOL)
    if not ok:
        raise SingularDowndateError(
            "Hessian is singular after removing the requested points "
            "(the remaining data no longer identify theta)"
        )
    return a + P @ z


def projective_update(theta_full, Xd, lko_preds):
    """``theta_full - pinv(sum x_i x_i^T) sum_i (theta_full.x_i - yhat_i) x_i``."""
    grad = Xd.T @ (Xd @ theta_full - lko_preds)
    return theta_full - fast_mult(pseudo_inv(Xd), grad)


_PRU_TOLS = (LEVERAGE_TOL, PIVOT_TOL, DROP_TOL, EIG_ZERO_TOL, JACOBI_TOL)


def pru_online(features, hat, residuals, responses, theta_full, idx) -> np.ndarray:
    """Fused PRU online step: LKO predictions, gradient and projected update in one call.

    Same arithmetic as ``projective_update(theta_full, X[idx], lko_predictions(...))``
    without the per-call array bookkeeping, which otherwise dominates at small k.
    """
    theta, status = _kernels.ACTIVE.pru_online(
        features, hat, residuals, responses, theta_full, idx, _PRU_TOLS, JACOBI_MAX_SWEEPS
    )
    if status == 0:
        return theta
    if status == 1:
        raise DegenerateLKOError(
            "leverage h_jj == 1 at a deleted point: deleting it removes essential "
            "support and the leave-k-out fit is ill-posed"
        )
    if status == 2:
        raise DegenerateLKOError("leave-k-out system I - T is singular")
    raise NonConvergenceError(
        f"Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps"
    )


def exact_delete(model: PrecomputedModel, req: DeletionRequest) -> DeletionResult:
    """Exact leave-k-out refit as one Newton step with a Woodbury-downdated Hessian."""
    req.validate(model.n)
    idx = req.indices
    start = time.perf_counter()
    Xd = model.dataset.features[idx]
    wd = np.ones(req.k) if model.dataset.weights is None else model.dataset.weights[idx]
    grad = lko_gradient(model, idx)
    theta = model.theta_full - woodbury_newton_step(model.inv_hessian, Xd, wd, grad)
    elapsed = time.perf_counter() - start
    return DeletionResult(theta, "exact", elapsed)


def influence_delete(model: PrecomputedModel, req: DeletionRequest) -> DeletionResult:
    """Influence-function update using the full-data inverse Hessian."""
    req.validate(model.n)
    start = time.perf_counter()
    theta = model.theta_full - model.inv_hessian @ lko_gradient(model, req.indices)
    elapsed = time.perf_counter() - start
    return DeletionResult(theta, "influence", elapsed)


def pru_delete(model: PrecomputedModel, req: DeletionRequest) -> DeletionResult:
    """Projective residual update.

    Moves theta_full by the projection of the exact update onto the span of
    the deleted feature vectors, in O(k^2 d + k^3).
    """
    req.validate(model.n)
    data = model.dataset
    start = time.perf_counter()
    theta = pru_online(
        data.features, model.hat, model.residuals, data.responses, model.theta_full, req.indices
    )
    elapsed = time.perf_counter() - start
    return DeletionResult(theta, "pru", elapsed)


METHODS = {
    "exact": exact_delete,
    "influence": influence_delete,
    "pru": pru_delete,
}
