"""Inner loops for the online deletion path.

Two interchangeable implementations live here: loop kernels compiled with
numba and vectorised numpy equivalents. ``ACTIVE`` points at one of them and
is picked at import time. Set ``PRUDELETE_DISABLE_NUMBA=1`` to force numpy
(useful when debugging or when numba is unavailable).

Every kernel takes and returns plain float64 arrays so both backends share a
signature.
"""

from __future__ import annotations

import os
import types

import numpy as np

_FLAG = os.environ.get("PRUDELETE_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _DISABLED

# eigenvalues below this have no finite reciprocal worth keeping
TINY = float(np.finfo(np.float64).tiny)


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------


def gram_schmidt_np(vectors, drop_tol):
    k, d = vectors.shape
    basis = np.zeros((min(k, d), d))
    coeffs = np.zeros((k, min(k, d)))
    r = 0
    for i in range(k):
        x = vectors[i]
        w = x.copy()
        c = np.zeros(r)
        # two passes of modified Gram-Schmidt
        for _ in range(2):
            for j in range(r):
                proj = basis[j] @ w
                w -= proj * basis[j]
                c[j] += proj
        coeffs[i, :r] = c
        norm = np.sqrt(w @ w)
        xnorm = np.sqrt(x @ x)
        if norm <= drop_tol * xnorm or norm == 0.0 or r == d:
            continue
        basis[r] = w / norm
        coeffs[i, r] = norm
        r += 1
    return basis[:r].copy(), coeffs[:, :r].copy()


def jacobi_eigh_np(a, tol, max_sweeps):
    a = a.copy()
    m = a.shape[0]
    vecs = np.eye(m)
    scale = np.sqrt((a * a).sum())
    if scale == 0.0:
        return np.diag(a).copy(), vecs, 0
    offdiag = ~np.eye(m, dtype=bool)
    for sweep in range(max_sweeps + 1):
        if np.sqrt((a[offdiag] ** 2).sum()) <= tol * scale:
            return np.diag(a).copy(), vecs, sweep
        if sweep == max_sweeps:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                vecs[:, idx] = vecs[:, idx] @ rot
    return np.diag(a).copy(), vecs, -1


def fast_mult_np(inv_eigvals, eigvecs, v):
    return ((eigvecs @ v) * inv_eigvals) @ eigvecs


def solve_pivoted_np(a, b, pivot_tol):
    """Gaussian elimination with partial pivoting. Returns (x, ok)."""
    a = a.copy()
    b = b.copy()
    m = a.shape[0]
    scale = np.abs(a).max() if m else 0.0
    if scale == 0.0:
        return np.zeros(m), False
    for col in range(m):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[piv, col]) <= pivot_tol * scale:
            return np.zeros(m), False
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        f = a[col + 1 :, col] / a[col, col]
        a[col + 1 :, col:] -= np.outer(f, a[col, col:])
        b[col + 1 :] -= f * b[col]
    x = np.zeros(m)
    for i in range(m - 1, -1, -1):
        x[i] = (b[i] - a[i, i + 1 :] @ x[i + 1 :]) / a[i, i]
    return x, True


def lko_residuals_np(hat_block, residuals, pivot_tol):
    """Leave-k-out residuals from the k x k hat block.

    Solves (1 - h_ii) s_i - sum_{j != i} h_ij s_j = r_i.
    """
    system = -hat_block.copy()
    np.fill_diagonal(system, 1.0 - np.diag(hat_block))
    return solve_pivoted_np(system, residuals, pivot_tol)


def pru_online_np(X, hat, residuals, responses, theta, idx, tols, max_sweeps):
    """Whole online projective update. Returns (theta_new, status).

    ``tols`` = (leverage, pivot, drop, eig_zero, jacobi). Status codes:
    0 ok, 1 leverage == 1, 2 singular LKO system, 3 Jacobi did not converge.
    """
    lev_tol, pivot_tol, drop_tol, eig_tol, jac_tol = tols
    Xd = X[idx]
    hb = hat[np.ix_(idx, idx)]
    if np.any(np.abs(1.0 - np.diag(hb)) <= lev_tol):
        return theta.copy(), 1
    s, ok = lko_residuals_np(hb, residuals[idx], pivot_tol)
    if not ok:
        return theta.copy(), 2
    grad = Xd.T @ (Xd @ theta - (responses[idx] - s))
    basis, coeffs = gram_schmidt_np(Xd, drop_tol)
    if basis.shape[0] == 0:
        return theta.copy(), 0
    vals, vecs, sweeps = jacobi_eigh_np(coeffs.T @ coeffs, jac_tol, max_sweeps)
    if sweeps < 0:
        return theta.copy(), 3
    keep = (vals > eig_tol * vals.max()) & (vals >= TINY)
    eigvecs = vecs[:, keep].T @ basis
    return theta - fast_mult_np(1.0 / vals[keep], eigvecs, grad), 0


KERNELS_NUMPY = types.SimpleNamespace(
    name="numpy",
    gram_schmidt=gram_schmidt_np,
    jacobi_eigh=jacobi_eigh_np,
    fast_mult=fast_mult_np,
    solve_pivoted=solve_pivoted_np,
    lko_residuals=lko_residuals_np,
    pru_online=pru_online_np,
)


# ---------------------------------------------------------------------------
# numba loop kernels
# ---------------------------------------------------------------------------


def _gram_schmidt_loops(vectors, drop_tol):
    k, d = vectors.shape
    cap = min(k, d)
    basis = np.zeros((cap, d))
    coeffs = np.zeros((k, cap))
    w = np.empty(d)
    r = 0
    for i in range(k):
        xnorm2 = 0.0
        for t in range(d):
            w[t] = vectors[i, t]
            xnorm2 += w[t] * w[t]
        for _ in range(2):
            for j in range(r):
                proj = 0.0
                for t in range(d):
                    proj += basis[j, t] * w[t]
                for t in range(d):
                    w[t] -= proj * basis[j, t]
                coeffs[i, j] += proj
        norm2 = 0.0
        for t in range(d):
            norm2 += w[t] * w[t]
        norm = np.sqrt(norm2)
        if norm <= drop_tol * np.sqrt(xnorm2) or norm == 0.0 or r == d:
            continue
        for t in range(d):
            basis[r, t] = w[t] / norm
        coeffs[i, r] = norm
        r += 1
    return basis[:r].copy(), coeffs[:, :r].copy()


def _jacobi_eigh_loops(a_in, tol, max_sweeps):
    m = a_in.shape[0]
    a = a_in.copy()
    vecs = np.eye(m)
    total = 0.0
    for i in range(m):
        for j in range(m):
            total += a[i, j] * a[i, j]
    scale = np.sqrt(total)
    diag = np.empty(m)
    if scale == 0.0:
        for i in range(m):
            diag[i] = a[i, i]
        return diag, vecs, 0
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(m):
            for j in range(m):
                if i != j:
                    off += a[i, j] * a[i, j]
        if np.sqrt(off) <= tol * scale:
            for i in range(m):
                diag[i] = a[i, i]
            return diag, vecs, sweep
        if sweep == max_sweeps:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                else:
                    sgn = 1.0 if theta > 0.0 else -1.0
                    t = sgn / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for i in range(m):
                    aip = a[i, p]
                    aiq = a[i, q]
                    a[i, p] = c * aip - s * aiq
                    a[i, q] = s * aip + c * aiq
                for j in range(m):
                    apj = a[p, j]
                    aqj = a[q, j]
                    a[p, j] = c * apj - s * aqj
                    a[q, j] = s * apj + c * aqj
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(m):
                    vip = vecs[i, p]
                    viq = vecs[i, q]
                    vecs[i, p] = c * vip - s * viq
                    vecs[i, q] = s * vip + c * viq
    for i in range(m):
        diag[i] = a[i, i]
    return diag, vecs, -1


def _fast_mult_loops(inv_eigvals, eigvecs, v):
    r, d = eigvecs.shape
    out = np.zeros(d)
    for i in range(r):
        dot = 0.0
        for t in range(d):
            dot += eigvecs[i, t] * v[t]
        coef = inv_eigvals[i] * dot
        for t in range(d):
            out[t] += coef * eigvecs[i, t]
    return out


def _solve_pivoted_loops(a_in, b_in, pivot_tol):
    m = a_in.shape[0]
    a = a_in.copy()
    b = b_in.copy()
    x = np.zeros(m)
    scale = 0.0
    for i in range(m):
        for j in range(m):
            if abs(a[i, j]) > scale:
                scale = abs(a[i, j])
    if scale == 0.0:
        return x, False
    for col in range(m):
        piv = col
        best = abs(a[col, col])
        for i in range(col + 1, m):
            if abs(a[i, col]) > best:
                best = abs(a[i, col])
                piv = i
        if best <= pivot_tol * scale:
            return x, False
        if piv != col:
            for j in range(m):
                tmp = a[col, j]
                a[col, j] = a[piv, j]
                a[piv, j] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        for i in range(col + 1, m):
            f = a[i, col] / a[col, col]
            if f == 0.0:
                continue
            for j in range(col, m):
                a[i, j] -= f * a[col, j]
            b[i] -= f * b[col]
    for i in range(m - 1, -1, -1):
        acc = b[i]
        for j in range(i + 1, m):
            acc -= a[i, j] * x[j]
        x[i] = acc / a[i, i]
    return x, True


def _make_numba_namespace():
    gs = njit(cache=True)(_gram_schmidt_loops)
    jac = njit(cache=True)(_jacobi_eigh_loops)
    fm = njit(cache=True)(_fast_mult_loops)
    solve = njit(cache=True)(_solve_pivoted_loops)

    @njit(cache=True)
    def lko(hat_block, residuals, pivot_tol):
        m = hat_block.shape[0]
        system = np.empty((m, m))
        for i in range(m):
            for j in range(m):
                system[i, j] = -hat_block[i, j]
            system[i, i] = 1.0 - hat_block[i, i]
        return solve(system, residuals, pivot_tol)

    @njit(cache=True)
    def pru_online(X, hat, residuals, responses, theta, idx, tols, max_sweeps):
        lev_tol, pivot_tol, drop_tol, eig_tol, jac_tol = tols
        k = idx.shape[0]
        d = X.shape[1]
        out = theta.copy()
        Xd = np.empty((k, d))
        hb = np.empty((k, k))
        r = np.empty(k)
        for a in range(k):
            ia = idx[a]
            for t in range(d):
                Xd[a, t] = X[ia, t]
            for b in range(k):
                hb[a, b] = hat[ia, idx[b]]
            r[a] = residuals[ia]
            if abs(1.0 - hb[a, a]) <= lev_tol:
                return out, 1
        s, ok = lko(hb, r, pivot_tol)
        if not ok:
            return out, 2
        grad = np.zeros(d)
        for a in range(k):
            pred = 0.0
            for t in range(d):
                pred += Xd[a, t] * theta[t]
            coef = pred - (responses[idx[a]] - s[a])
            for t in range(d):
                grad[t] += coef * Xd[a, t]
        basis, coeffs = gs(Xd, drop_tol)
        rank = basis.shape[0]
        if rank == 0:
            return out, 0
        gram = np.zeros((rank, rank))
        for i in range(k):
            for p in range(rank):
                cip = coeffs[i, p]
                if cip == 0.0:
                    continue
                for q in range(rank):
                    gram[p, q] += cip * coeffs[i, q]
        vals, vecs, sweeps = jac(gram, jac_tol, max_sweeps)
        if sweeps < 0:
            return out, 3
        lam_max = vals.max()
        v = np.empty(d)
        for e in range(rank):
            if vals[e] <= eig_tol * lam_max or vals[e] < TINY:
                continue
            for t in range(d):
                v[t] = 0.0
            for j in range(rank):
                a_je = vecs[j, e]
                for t in range(d):
                    v[t] += a_je * basis[j, t]
            dot = 0.0
            for t in range(d):
                dot += v[t] * grad[t]
            coef = dot / vals[e]
            for t in range(d):
                out[t] -= coef * v[t]
        return out, 0

    return types.SimpleNamespace(
        name="numba",
        gram_schmidt=gs,
        jacobi_eigh=jac,
        fast_mult=fm,
        solve_pivoted=solve,
        lko_residuals=lko,
        pru_online=pru_online,
    )


KERNELS_NUMBA = _make_numba_namespace() if HAS_NUMBA else None

ACTIVE = KERNELS_NUMBA if USE_NUMBA else KERNELS_NUMPY
