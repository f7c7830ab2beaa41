"""Seeded synthetic datasets: Gaussian designs, outliers, sparse FIT data, logistic labels.

Randomness comes from ``numpy.random.SeedSequence`` streams keyed by
``(seed, purpose[, attempt])``. Every purpose draws from its own stream, so
changing how much one part consumes never shifts another, and a dataset
depends only on its config.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import GenerationError
from .linear import Dataset
from .logistic import fit_logistic, sigmoid

SPD_EIG_LOW = 0.05
SPD_EIG_HIGH = 2.0
MAX_RETRIES = 50

_PURPOSES = {
    "covariance": 0,
    "features": 1,
    "theta": 2,
    "noise": 3,
    "mask": 4,
    "labels": 5,
}


def rng_stream(seed: int, purpose: str, *extra: int) -> np.random.Generator:
    key = (_PURPOSES[purpose], *extra)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


@dataclass(frozen=True)
class GenConfig:
    d: int
    k: int
    n: int | None = None  # defaults to 10 * d
    noise_sigma2: float = 1.0
    sparsity_p: float = 1.0
    outlier_scale: float = 1.0
    w_star: float = 10.0
    ridge_lambda: float = 0.1
    theta_scale: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n is None:
            object.__setattr__(self, "n", 10 * self.d)
        if self.d < 1 or self.k < 1:
            raise ValueError("need d >= 1 and k >= 1")
        if not self.k < self.n:
            raise ValueError("need k < n")
        if not 0.0 < self.sparsity_p <= 1.0:
            raise ValueError("sparsity_p must lie in (0, 1]")
        if self.outlier_scale <= 0:
            raise ValueError("outlier_scale must be positive")
        if self.noise_sigma2 < 0:
            raise ValueError("noise_sigma2 must be nonnegative")


@dataclass(frozen=True)
class GenOutput:
    dataset: Dataset
    theta_star: np.ndarray
    covariance: np.ndarray
    deleted_indices: np.ndarray
    injected_index: int | None = None
    theta_full: np.ndarray | None = None  # logistic FIT keeps the fit it validated


def gen_spd_covariance(d: int, seed) -> np.ndarray:
    """Random SPD matrix ``Q diag(lam) Q^T`` with lam ~ U[0.05, 2] and Haar-random Q."""
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else rng_stream(seed, "covariance")
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    Q *= np.sign(np.diag(R))
    eig = rng.uniform(SPD_EIG_LOW, SPD_EIG_HIGH, size=d)
    S = (Q * eig) @ Q.T
    return 0.5 * (S + S.T)


def _gaussian_rows(n, cov, rng) -> np.ndarray:
    L = np.linalg.cholesky(cov)
    return rng.standard_normal((n, cov.shape[0])) @ L.T


def _sparsify(X, k, p, n_cols, rng) -> None:
    """Zero columns [0, n_cols) in place: one shared pattern for the first k rows,
    independent entries elsewhere, each kept with probability p."""
    if p >= 1.0:
        return
    shared = rng.uniform(size=n_cols) < p
    X[:k, :n_cols] *= shared
    rest = rng.uniform(size=(X.shape[0] - k, n_cols)) < p
    X[k:, :n_cols] *= rest


def _theta_star(cfg, d, default_scale, rng):
    scale = default_scale if cfg.theta_scale is None else cfg.theta_scale
    return scale * rng.standard_normal(d)


def gen_linear(cfg: GenConfig) -> GenOutput:
    """Y = X theta* + eps with rows of X ~ N(0, Sigma) and eps ~ N(0, sigma^2 I)."""
    cov = gen_spd_covariance(cfg.d, cfg.seed)
    X = _gaussian_rows(cfg.n, cov, rng_stream(cfg.seed, "features"))
    theta = _theta_star(cfg, cfg.d, 1.0, rng_stream(cfg.seed, "theta"))
    eps = np.sqrt(cfg.noise_sigma2) * rng_stream(cfg.seed, "noise").standard_normal(cfg.n)
    Y = X @ theta + eps
    return GenOutput(
        dataset=Dataset(X, Y, ridge_lambda=cfg.ridge_lambda),
        theta_star=theta,
        covariance=cov,
        deleted_indices=np.arange(cfg.k),
    )


def scale_outliers(out: GenOutput, outlier_scale: float) -> GenOutput:
    """Multiply the deleted rows and their responses by ``outlier_scale``."""
    if outlier_scale <= 0:
        raise ValueError("outlier_scale must be positive")
    idx = out.deleted_indices
    if idx.size < 1:
        raise ValueError("no deleted rows to scale")
    X = out.dataset.features.copy()
    Y = out.dataset.responses.copy()
    X[idx] *= outlier_scale
    Y[idx] *= outlier_scale
    return replace(out, dataset=replace(out.dataset, features=X, responses=Y))


def gen_fit_linear(cfg: GenConfig) -> GenOutput:
    """Sparse linear data with an injected last feature present only in the first k rows.

    The first k rows share one sparsity pattern over the other columns and
    their responses are exactly ``w_star * X[i, -1]``.
    """
    d, k, n = cfg.d, cfg.k, cfg.n
    if d < 2:
        raise ValueError("FIT data needs d >= 2 (one column is the injected feature)")
    cov = gen_spd_covariance(d, cfg.seed)
    X = _gaussian_rows(n, cov, rng_stream(cfg.seed, "features"))
    X[k:, d - 1] = 0.0
    _sparsify(X, k, cfg.sparsity_p, d - 1, rng_stream(cfg.seed, "mask"))
    theta = _theta_star(cfg, d, 1.0, rng_stream(cfg.seed, "theta"))
    eps = np.sqrt(cfg.noise_sigma2) * rng_stream(cfg.seed, "noise").standard_normal(n)
    Y = X @ theta + eps
    Y[:k] = cfg.w_star * X[:k, d - 1]
    return GenOutput(
        dataset=Dataset(X, Y, ridge_lambda=cfg.ridge_lambda),
        theta_star=theta,
        covariance=cov,
        deleted_indices=np.arange(k),
        injected_index=d - 1,
    )


def _logistic_scale(cfg, n_cols):
    return 1.0 / np.sqrt(max(cfg.sparsity_p * n_cols, 1.0))


def gen_logistic(cfg: GenConfig) -> GenOutput:
    """Well-specified logistic data, P(y=1 | x) = sigmoid(x . theta*), on sparse Gaussian rows."""
    cov = gen_spd_covariance(cfg.d, cfg.seed)
    X = _gaussian_rows(cfg.n, cov, rng_stream(cfg.seed, "features"))
    _sparsify(X, cfg.k, cfg.sparsity_p, cfg.d, rng_stream(cfg.seed, "mask"))
    theta = _theta_star(cfg, cfg.d, _logistic_scale(cfg, cfg.d), rng_stream(cfg.seed, "theta"))
    u = rng_stream(cfg.seed, "labels").uniform(size=cfg.n)
    Y = (u < sigmoid(X @ theta)).astype(np.float64)
    return GenOutput(
        dataset=Dataset(X, Y, ridge_lambda=cfg.ridge_lambda),
        theta_star=theta,
        covariance=cov,
        deleted_indices=np.arange(cfg.k),
    )


def gen_fit_logistic(cfg: GenConfig) -> GenOutput:
    """Logistic FIT data.

    The deleted rows carry label 1 and injected feature 1, every other row has
    injected feature 0, and the fitted full model must classify the deleted
    rows correctly. Draws are repeated (fresh streams) up to 50 times.
    """
    d, k, n = cfg.d, cfg.k, cfg.n
    if d < 2:
        raise ValueError("FIT data needs d >= 2 (one column is the injected feature)")
    if cfg.ridge_lambda <= 0:
        raise ValueError("logistic FIT needs ridge_lambda > 0")
    cov = gen_spd_covariance(d - 1, cfg.seed)
    theta = np.zeros(d)
    theta[: d - 1] = _theta_star(
        cfg, d - 1, _logistic_scale(cfg, d - 1), rng_stream(cfg.seed, "theta")
    )
    for attempt in range(MAX_RETRIES):
        X = np.zeros((n, d))
        X[:, : d - 1] = _gaussian_rows(n, cov, rng_stream(cfg.seed, "features", attempt))
        _sparsify(X, k, cfg.sparsity_p, d - 1, rng_stream(cfg.seed, "mask", attempt))
        X[:k, d - 1] = 1.0
        u = rng_stream(cfg.seed, "labels", attempt).uniform(size=n)
        Y = (u < sigmoid(X @ theta)).astype(np.float64)
        Y[:k] = 1.0
        theta_full = fit_logistic(X, Y, cfg.ridge_lambda)
        if np.all(X[:k] @ theta_full > 0):
            return GenOutput(
                dataset=Dataset(X, Y, ridge_lambda=cfg.ridge_lambda),
                theta_star=theta,
                covariance=cov,
                deleted_indices=np.arange(k),
                injected_index=d - 1,
                theta_full=theta_full,
            )
    raise GenerationError(
        f"could not draw a logistic FIT dataset whose deleted points are all "
        f"classified correctly in {MAX_RETRIES} attempts"
    )
