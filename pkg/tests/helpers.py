"""Shared oracles for the test suite: random instances and from-scratch refits."""

import numpy as np

from prudelete.linear import Dataset, fit_ridge


def random_instance(rng, n=None, d=None, k=None, ridge_lambda=None, weighted=None):
    d = int(rng.integers(1, 51)) if d is None else d
    k = int(rng.integers(1, 11)) if k is None else k
    lam = float(rng.choice([0.0, 0.1, 1.0])) if ridge_lambda is None else ridge_lambda
    if n is None:
        # at lambda = 0 the retained rows must still have full column rank
        n = int(rng.integers(d + k + 5, 501))
    X = rng.standard_normal((n, d)) * rng.uniform(0.5, 2.0, size=d)
    Y = X @ rng.standard_normal(d) + rng.standard_normal(n)
    weighted = bool(rng.integers(2)) if weighted is None else weighted
    w = rng.uniform(0.2, 3.0, size=n) if weighted else None
    idx = rng.choice(n, size=k, replace=False)
    return Dataset(X, Y, weights=w, ridge_lambda=lam), idx


def retained(data, idx):
    keep = np.ones(data.n, dtype=bool)
    keep[np.asarray(idx)] = False
    w = None if data.weights is None else data.weights[keep]
    return Dataset(data.features[keep], data.responses[keep], w, data.ridge_lambda)


def refit(data, idx):
    return fit_ridge(retained(data, idx))


def span_projection(vectors, v):
    """Projection of v onto span(rows of vectors) via an SVD basis (robust to duplicates)."""
    U, s, _ = np.linalg.svd(np.asarray(vectors).T, full_matrices=False)
    U = U[:, s > 1e-10 * s.max()] if s.size and s.max() > 0 else U[:, :0]
    return U @ (U.T @ v)


def rel_err(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), 1e-300))
