"""Low-rank pseudoinverse of ``B = sum_i x_i x_i^T`` for a handful of vectors.

The eigendecomposition of ``B`` is recovered from a k x k problem: orthonormalise
the vectors, eigendecompose the Gram matrix of their coordinates, then lift the
small eigenvectors back to R^d. Nothing here forms a d x d matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

DROP_TOL = 1e-10
EIG_ZERO_TOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 50
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class OrthoFactorization:
    """Result of Gram-Schmidt on k vectors.

    ``coeffs`` is k x r with ``x_i = sum_j coeffs[i, j] * basis[j]``. When no
    vector is dropped r == k and ``coeffs`` is lower triangular.
    """

    basis: np.ndarray
    coeffs: np.ndarray

    @property
    def effective_rank(self) -> int:
        return self.basis.shape[0]


@dataclass(frozen=True)
class LowRankPinv:
    """``A+ = sum_i eigvecs[i] eigvecs[i]^T / eigvals[i]`` with eigvals descending."""

    eigvals: np.ndarray
    eigvecs: np.ndarray
    dim: int

    @property
    def rank(self) -> int:
        return self.eigvals.shape[0]

    def dense(self) -> np.ndarray:
        """Materialise the d x d pseudoinverse. For tests and small d only."""
        return (self.eigvecs.T / self.eigvals) @ self.eigvecs


def _as_vectors(vectors) -> np.ndarray:
    try:
        arr = np.asarray(vectors, dtype=np.float64)
    except ValueError as exc:
        raise ValueError("input vectors have mismatched dimensions") from exc
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError("expected a sequence of equal-length vectors")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("need at least one vector of dimension >= 1")
    return np.ascontiguousarray(arr)


def gram_schmidt(vectors) -> OrthoFactorization:
    """Modified Gram-Schmidt with one re-orthogonalisation pass.

    A vector whose remainder after projection has norm <= 1e-10 times its own
    norm contributes no new direction and is dropped from the basis.
    """
    arr = _as_vectors(vectors)
    basis, coeffs = _kernels.ACTIVE.gram_schmidt(arr, DROP_TOL)
    return OrthoFactorization(basis=basis, coeffs=coeffs)


def eigendecompose_small(matrix):
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    Returns ``(eigvals, eigvecs)`` sorted by descending eigenvalue, with the
    eigenvectors as the *columns* of ``eigvecs``.
    """
    a = np.ascontiguousarray(np.asarray(matrix, dtype=np.float64))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.abs(a).max())) if a.size else 1.0
    if np.abs(a - a.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    vals, vecs, sweeps = _kernels.ACTIVE.jacobi_eigh(a, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise np.linalg.LinAlgError(
            f"Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )
    order = np.argsort(-vals, kind="stable")
    return vals[order], np.ascontiguousarray(vecs[:, order])


def _from_factorization(fact: OrthoFactorization, dim: int) -> LowRankPinv:
    if fact.effective_rank == 0:
        return LowRankPinv(np.zeros(0), np.zeros((0, dim)), dim)
    coeffs = fact.coeffs
    gram = coeffs.T @ coeffs
    vals, small_vecs = eigendecompose_small(gram)
    keep = (vals > EIG_ZERO_TOL * vals[0]) & (vals >= _kernels.TINY)
    vals = vals[keep]
    # v_i = sum_j a_ij u_j
    eigvecs = small_vecs[:, keep].T @ fact.basis
    return LowRankPinv(eigvals=vals, eigvecs=np.ascontiguousarray(eigvecs), dim=dim)


def pseudo_inv(vectors) -> LowRankPinv:
    """Pseudoinverse of ``sum_i x_i x_i^T`` in eigen form.

    Eigenvalues at or below 1e-10 of the largest, or below the smallest normal
    float, are treated as zero.
    """
    arr = _as_vectors(vectors)
    return _from_factorization(gram_schmidt(arr), arr.shape[1])


def fast_mult(pinv: LowRankPinv, v) -> np.ndarray:
    """``A+ v`` as ``sum_i (v_i . v / lambda_i) v_i``; O(r d)."""
    vec = np.ascontiguousarray(np.asarray(v, dtype=np.float64))
    if vec.shape != (pinv.dim,):
        raise ValueError(f"vector has shape {vec.shape}, expected ({pinv.dim},)")
    if pinv.rank == 0:
        return np.zeros(pinv.dim)
    return _kernels.ACTIVE.fast_mult(1.0 / pinv.eigvals, pinv.eigvecs, vec)


def project_onto_span(vectors, v) -> np.ndarray:
    """Orthogonal projection of ``v`` onto span(vectors)."""
    arr = _as_vectors(vectors)
    vec = np.asarray(v, dtype=np.float64)
    if vec.shape != (arr.shape[1],):
        raise ValueError("dimension mismatch between vectors and v")
    basis = gram_schmidt(arr).basis
    return basis.T @ (basis @ vec)
