import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helpers import span_projection
from prudelete.lowrank import (
    LowRankPinv,
    eigendecompose_small,
    fast_mult,
    gram_schmidt,
    project_onto_span,
    pseudo_inv,
)


def _dense_A(vectors):
    X = np.atleast_2d(np.asarray(vectors, dtype=float))
    return X.T @ X


class TestGramSchmidt:
    def test_orthogonal_inputs(self, backend):
        f = gram_schmidt([(1, 0, 0), (0, 2, 0)])
        np.testing.assert_allclose(f.basis, [[1, 0, 0], [0, 1, 0]], atol=1e-15)
        np.testing.assert_allclose(f.coeffs, [[1, 0], [0, 2]], atol=1e-15)

    def test_single_vector(self, backend):
        f = gram_schmidt([(3, 4)])
        np.testing.assert_allclose(f.basis, [[0.6, 0.8]])
        np.testing.assert_allclose(f.coeffs, [[5.0]])

    def test_random_reconstruction(self, backend, rng):
        X = rng.standard_normal((3, 5))
        f = gram_schmidt(X)
        assert f.effective_rank == 3
        np.testing.assert_allclose(f.coeffs @ f.basis, X, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(f.basis @ f.basis.T, np.eye(3), atol=1e-10)
        assert np.allclose(np.triu(f.coeffs, 1), 0.0)

    def test_duplicate_is_dropped(self, backend, rng):
        x = rng.standard_normal(6)
        y = rng.standard_normal(6)
        f = gram_schmidt([x, y, 2.0 * x, x + y])
        assert f.effective_rank == 2
        np.testing.assert_allclose(f.coeffs @ f.basis, [x, y, 2 * x, x + y], atol=1e-12)

    def test_zero_vectors_give_rank_zero(self, backend):
        f = gram_schmidt(np.zeros((3, 4)))
        assert f.effective_rank == 0
        assert f.basis.shape == (0, 4)
        assert f.coeffs.shape == (3, 0)

    def test_more_vectors_than_dims(self, backend, rng):
        X = rng.standard_normal((7, 3))
        f = gram_schmidt(X)
        assert f.effective_rank == 3
        np.testing.assert_allclose(f.coeffs @ f.basis, X, atol=1e-12)

    def test_ragged_input_rejected(self):
        with pytest.raises(ValueError):
            gram_schmidt([(1.0, 2.0), (1.0, 2.0, 3.0)])


class TestEigendecompose:
    def test_diagonal(self, backend):
        vals, vecs = eigendecompose_small([[2.0, 0.0], [0.0, 3.0]])
        np.testing.assert_allclose(vals, [3, 2])
        np.testing.assert_allclose(np.abs(vecs), [[0, 1], [1, 0]], atol=1e-15)

    def test_rank_one(self, backend):
        vals, vecs = eigendecompose_small([[1.0, 1.0], [1.0, 1.0]])
        np.testing.assert_allclose(vals, [2, 0], atol=1e-14)
        r = 1 / np.sqrt(2)
        np.testing.assert_allclose(np.abs(vecs), [[r, r], [r, r]], atol=1e-14)
        assert vecs[0, 1] * vecs[1, 1] < 0

    def test_random_reconstruction(self, backend, rng):
        B = rng.standard_normal((5, 5))
        C = B + B.T
        vals, vecs = eigendecompose_small(C)
        assert np.all(np.diff(vals) <= 0)
        np.testing.assert_allclose((vecs * vals) @ vecs.T, C, atol=1e-9)
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(5), atol=1e-10)
        for lam, a in zip(vals, vecs.T):
            assert np.linalg.norm(C @ a - lam * a) <= 1e-9 * np.linalg.norm(C)
        np.testing.assert_allclose(vals, np.linalg.eigvalsh(C)[::-1], atol=1e-10)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            eigendecompose_small([[1.0, 2.0], [0.0, 1.0]])

    def test_zero_matrix(self, backend):
        vals, vecs = eigendecompose_small(np.zeros((3, 3)))
        np.testing.assert_array_equal(vals, 0.0)
        np.testing.assert_array_equal(vecs, np.eye(3))


class TestPseudoInverse:
    def test_axis_aligned_rank_one(self, backend):
        p = pseudo_inv([(2.0, 0.0)])
        assert p.rank == 1
        np.testing.assert_allclose(p.eigvals, [4.0])
        np.testing.assert_allclose(np.abs(p.eigvecs), [[1.0, 0.0]])
        np.testing.assert_allclose(p.dense(), [[0.25, 0], [0, 0]])

    def test_orthonormal_inputs_are_self_inverse(self, backend):
        p = pseudo_inv([(1, 0, 0), (0, 1, 0)])
        np.testing.assert_allclose(p.dense(), np.diag([1.0, 1.0, 0.0]), atol=1e-15)

    def test_matches_svd_oracle(self, backend, rng):
        X = rng.standard_normal((3, 6))
        np.testing.assert_allclose(pseudo_inv(X).dense(), np.linalg.pinv(X.T @ X), atol=1e-9)

    def test_eigenvectors_orthonormal_positive(self, backend, rng):
        X = rng.standard_normal((4, 9))
        p = pseudo_inv(X)
        assert np.all(p.eigvals > 0)
        np.testing.assert_allclose(p.eigvecs @ p.eigvecs.T, np.eye(4), atol=1e-10)

    def test_duplicates_reduce_rank(self, backend, rng):
        x = rng.standard_normal(5)
        p = pseudo_inv([x, x, -x])
        assert p.rank == 1
        np.testing.assert_allclose(p.dense(), np.linalg.pinv(3 * np.outer(x, x)), atol=1e-9)

    def test_all_zero(self, backend):
        p = pseudo_inv(np.zeros((2, 3)))
        assert p.rank == 0
        np.testing.assert_array_equal(p.dense(), np.zeros((3, 3)))
        np.testing.assert_array_equal(fast_mult(p, np.ones(3)), np.zeros(3))

    def test_underflowing_eigenvalue_is_zero(self, backend):
        p = pseudo_inv([(4e-162, 0.0)])
        assert p.rank == 0
        assert np.all(np.isfinite(p.dense()))


@settings(max_examples=200, deadline=None)
@given(
    base=arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 8)),
                elements=st.floats(-10, 10, allow_nan=False, allow_subnormal=False)),
    dup=st.integers(0, 3),
)
def test_penrose_identities(base, dup):
    X = np.vstack([base] + [base[:1] * (j + 2) for j in range(dup)])
    A = _dense_A(X)
    U, s, _ = np.linalg.svd(X.T, full_matrices=False)
    lam = s**2
    top = lam.max() if lam.size else 0.0
    # eigenvalues of A within two decades of the 1e-10 cutoff may go either way
    assume(not np.any((lam > 1e-12 * top) & (lam < 1e-8 * top)))
    P = pseudo_inv(X).dense()
    keep = (lam > 1e-10 * top) & (lam >= np.finfo(float).tiny)
    proj = U[:, keep] @ U[:, keep].T
    # forward error grows with the condition number of the kept spectrum
    kappa = top / lam[keep].min() if keep.any() else 1.0
    slack = 16 * np.finfo(float).eps * kappa
    a_max = max(1.0, np.abs(A).max())
    p_max = max(1.0, np.abs(P).max())
    assert np.abs(A @ P @ A - A).max() <= (1e-9 + slack) * a_max
    assert np.abs(P @ A @ P - P).max() <= (1e-9 + slack) * p_max
    assert np.abs(P @ A - proj).max() <= 1e-9 + slack * p_max * a_max


class TestFastMult:
    def test_projection_example(self, backend):
        p = LowRankPinv(np.array([1.0, 1.0]), np.array([[1.0, 0, 0], [0, 1.0, 0]]), 3)
        np.testing.assert_allclose(fast_mult(p, [3, 4, 5]), [3, 4, 0])

    def test_null_space_input(self, backend):
        p = pseudo_inv([(1.0, 0, 0), (1.0, 1.0, 0)])
        np.testing.assert_allclose(fast_mult(p, [0, 0, 7.0]), 0.0, atol=1e-15)

    def test_matches_dense(self, backend, rng):
        X = rng.standard_normal((4, 20))
        v = rng.standard_normal(20)
        p = pseudo_inv(X)
        dense = p.dense() @ v
        assert np.linalg.norm(fast_mult(p, v) - dense) <= 1e-10 * np.linalg.norm(dense)

    def test_dimension_mismatch(self, rng):
        p = pseudo_inv(rng.standard_normal((2, 4)))
        with pytest.raises(ValueError):
            fast_mult(p, np.ones(5))


class TestProjectOntoSpan:
    def test_axis(self):
        np.testing.assert_allclose(project_onto_span([(1.0, 0.0)], [3.0, 7.0]), [3.0, 0.0])

    def test_idempotent_in_span(self, rng):
        X = rng.standard_normal((3, 7))
        v = X.T @ rng.standard_normal(3)
        np.testing.assert_allclose(project_onto_span(X, v), v, atol=1e-12)

    def test_random_against_oracle(self, rng):
        X = rng.standard_normal((4, 10))
        v = rng.standard_normal(10)
        p = project_onto_span(X, v)
        np.testing.assert_allclose(p, span_projection(X, v), atol=1e-10)
        np.testing.assert_allclose(X @ (v - p), 0.0, atol=1e-10)
        np.testing.assert_allclose(project_onto_span(X, p), p, atol=1e-12)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            project_onto_span([(1.0, 0.0)], [1.0, 2.0, 3.0])
