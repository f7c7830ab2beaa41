"""Compare the numba and numpy kernel backends on the online deletion path.

    python benchmarks/bench_kernels.py [--d 200,800] [--k 5,25] [--number 200]

Prints per-call times (best of 5 batches) and the numpy/numba ratio.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from prudelete import _kernels
from prudelete.deletion import _PRU_TOLS
from prudelete.lowrank import DROP_TOL, JACOBI_MAX_SWEEPS, JACOBI_TOL


def _cases(d, k, rng):
    n = 10 * d
    X = rng.standard_normal((n, d))
    hat = rng.uniform(0.0, 1.0 / d, size=(n, n))
    hat = 0.5 * (hat + hat.T)
    resid = rng.standard_normal(n)
    y = rng.standard_normal(n)
    theta = rng.standard_normal(d)
    idx = np.arange(k)
    Xd = np.ascontiguousarray(X[:k])
    gram = Xd @ Xd.T
    block = np.ascontiguousarray(hat[:k, :k])
    return {
        "gram_schmidt": lambda K: K.gram_schmidt(Xd, DROP_TOL),
        "jacobi_eigh": lambda K: K.jacobi_eigh(gram, JACOBI_TOL, JACOBI_MAX_SWEEPS),
        "lko_residuals": lambda K: K.lko_residuals(block, resid[:k].copy(), 1e-13),
        "pru_online": lambda K: K.pru_online(X, hat, resid, y, theta, idx, _PRU_TOLS, JACOBI_MAX_SWEEPS),
    }


def _best(fn, number):
    fn()
    return min(timeit.repeat(fn, number=number, repeat=5)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", default="200,800")
    ap.add_argument("--k", default="5,25")
    ap.add_argument("--number", type=int, default=200)
    args = ap.parse_args(argv)
    if not _kernels.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    backends = {"numba": _kernels.KERNELS_NUMBA, "numpy": _kernels.KERNELS_NUMPY}
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'d':>6}{'k':>5}{'numba us':>12}{'numpy us':>12}{'speedup':>10}")
    for d in (int(v) for v in args.d.split(",")):
        for k in (int(v) for v in args.k.split(",")):
            for name, call in _cases(d, k, rng).items():
                t = {b: _best(lambda K=K: call(K), args.number) for b, K in backends.items()}
                print(f"{name:<14}{d:>6}{k:>5}{t['numba'] * 1e6:>12.2f}"
                      f"{t['numpy'] * 1e6:>12.2f}{t['numpy'] / t['numba']:>10.1f}x")


if __name__ == "__main__":
    main()
