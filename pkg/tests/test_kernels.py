import os
import subprocess
import sys

import numpy as np
import pytest

from prudelete import _kernels
from prudelete.deletion import _PRU_TOLS
from prudelete.lowrank import DROP_TOL, JACOBI_MAX_SWEEPS, JACOBI_TOL

pytestmark = pytest.mark.skipif(not _kernels.HAS_NUMBA, reason="numba not installed")

NB, NP = _kernels.KERNELS_NUMBA, _kernels.KERNELS_NUMPY


@pytest.mark.parametrize("shape", [(1, 1), (3, 5), (6, 4), (10, 40)])
def test_gram_schmidt_parity(rng, shape):
    X = rng.standard_normal(shape)
    X[-1] = X[0]
    b1, c1 = NB.gram_schmidt(X, DROP_TOL)
    b2, c2 = NP.gram_schmidt(X, DROP_TOL)
    assert b1.shape == b2.shape
    np.testing.assert_allclose(b1, b2, atol=1e-12)
    np.testing.assert_allclose(c1, c2, atol=1e-12)


@pytest.mark.parametrize("m", [1, 2, 5, 12])
def test_jacobi_parity(rng, m):
    B = rng.standard_normal((m, m))
    A = B @ B.T
    v1, V1, s1 = NB.jacobi_eigh(A, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    v2, V2, s2 = NP.jacobi_eigh(A, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    assert s1 == s2 >= 0
    np.testing.assert_allclose(v1, v2, atol=1e-10 * np.abs(A).max())
    np.testing.assert_allclose(np.abs(V1), np.abs(V2), atol=1e-8)


def test_jacobi_reports_nonconvergence(rng):
    B = rng.standard_normal((6, 6))
    A = B + B.T
    for K in (NB, NP):
        assert K.jacobi_eigh(A, JACOBI_TOL, 0)[2] == -1


def test_solve_parity(rng):
    A = rng.standard_normal((7, 7))
    b = rng.standard_normal(7)
    x1, ok1 = NB.solve_pivoted(A, b, 1e-13)
    x2, ok2 = NP.solve_pivoted(A, b, 1e-13)
    assert ok1 and ok2
    np.testing.assert_allclose(x1, np.linalg.solve(A, b), rtol=1e-10)
    np.testing.assert_allclose(x1, x2, rtol=1e-12)
    S = np.ones((3, 3))
    assert not NB.solve_pivoted(S, b[:3], 1e-13)[1]
    assert not NP.solve_pivoted(S, b[:3], 1e-13)[1]


def test_lko_and_fast_mult_parity(rng):
    H = rng.uniform(0, 0.1, (5, 5))
    r = rng.standard_normal(5)
    np.testing.assert_allclose(NB.lko_residuals(H, r, 1e-13)[0], NP.lko_residuals(H, r, 1e-13)[0], rtol=1e-12)
    V = np.linalg.qr(rng.standard_normal((9, 3)))[0].T.copy()
    inv = rng.uniform(0.5, 2.0, 3)
    v = rng.standard_normal(9)
    np.testing.assert_allclose(NB.fast_mult(inv, V, v), NP.fast_mult(inv, V, v), rtol=1e-12)


@pytest.mark.parametrize("k", [1, 4, 9])
def test_pru_online_parity(rng, k):
    n, d = 60, 8
    X = rng.standard_normal((n, d))
    X[k - 1] = X[0]
    H = rng.uniform(0, 0.05, (n, n))
    res = rng.standard_normal(n)
    y = rng.standard_normal(n)
    theta = rng.standard_normal(d)
    idx = np.arange(k)
    t1, s1 = NB.pru_online(X, H, res, y, theta, idx, _PRU_TOLS, JACOBI_MAX_SWEEPS)
    t2, s2 = NP.pru_online(X, H, res, y, theta, idx, _PRU_TOLS, JACOBI_MAX_SWEEPS)
    assert s1 == s2 == 0
    np.testing.assert_allclose(t1, t2, rtol=1e-10, atol=1e-12)


def test_pru_online_status_codes():
    X = np.eye(2)
    y = np.ones(2)
    theta = np.zeros(2)
    idx = np.array([0, 1])
    for K in (NB, NP):
        assert K.pru_online(X, np.eye(2), y, y, theta, idx, _PRU_TOLS, 50)[1] == 1
        assert K.pru_online(X, np.full((2, 2), 0.5), y, y, theta, idx, _PRU_TOLS, 50)[1] == 2


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("", "numba")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, PRUDELETE_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "import prudelete; print(prudelete.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == expected
