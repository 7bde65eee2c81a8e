"""Compare the compiled and pure-Python hot-kernel backends.

Times the sparse approximate-inverse factorization and the log-MAP
decoder on representative problem sizes and prints a small table.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np
import scipy.sparse as sp

from otfseq._kernels import _pure
from otfseq.coding import CodeConfig, trellis_tables
from otfseq.fspai import fspai
from otfseq.sparse import SparseHermitianMatrix

try:
    from otfseq._kernels import _core
except ImportError:
    _core = None


def otfs_like_matrix(n: int, paths: int, seed: int) -> SparseHermitianMatrix:
    """Random HPD matrix with a banded-ish pattern like a covariance."""
    rng = np.random.default_rng(seed)
    rows, cols, vals = [], [], []
    for k in range(n):
        for off in rng.choice(np.arange(1, 3 * paths), size=paths, replace=False):
            r = (k + int(off)) % n
            if r == k:
                continue
            val = (rng.normal() + 1j * rng.normal()) / (4 * np.sqrt(paths))
            rows += [r, k]
            cols += [k, r]
            vals += [val, np.conj(val)]
    a = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    a = a + sp.identity(n, format="csc") * (np.abs(a).sum(axis=0).max() + 1.0)
    return SparseHermitianMatrix(a.tocsc())


def time_call(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_fspai(repeat: int):
    print(f"{'fspai':>10} {'n':>6} {'zeta':>5} {'pure (s)':>10} "
          f"{'compiled (s)':>13} {'speedup':>8}")
    for n, zeta in ((256, 8), (1024, 8), (2048, 16)):
        a = otfs_like_matrix(n, 8, seed=n)
        args = (a.shape[0], a.indptr.astype(np.int64),
                a.indices.astype(np.int64), a.data, a.diag, zeta, 1e-3)
        t_pure = time_call(lambda: _pure.fspai_factor(*args), repeat)
        if _core is None:
            print(f"{'':>10} {n:>6} {zeta:>5} {t_pure:>10.4f} {'absent':>13}")
            continue
        t_core = time_call(lambda: _core.fspai_factor(*args), repeat)
        print(f"{'':>10} {n:>6} {zeta:>5} {t_pure:>10.4f} {t_core:>13.4f} "
              f"{t_pure / t_core:>7.1f}x")


def bench_bcjr(repeat: int):
    cfg = CodeConfig()
    next_state, out_bits = trellis_tables(cfg)
    print(f"{'bcjr':>10} {'bits':>6} {'':>5} {'pure (s)':>10} "
          f"{'compiled (s)':>13} {'speedup':>8}")
    rng = np.random.default_rng(3)
    for n_coded in (1024, 4096, 16384):
        la = rng.normal(scale=2.0, size=n_coded)
        t_pure = time_call(lambda: _pure.bcjr(la, next_state, out_bits), repeat)
        if _core is None:
            print(f"{'':>10} {n_coded:>6} {'':>5} {t_pure:>10.4f} {'absent':>13}")
            continue
        t_core = time_call(lambda: _core.bcjr(la, next_state, out_bits), repeat)
        print(f"{'':>10} {n_coded:>6} {'':>5} {t_pure:>10.4f} {t_core:>13.4f} "
              f"{t_pure / t_core:>7.1f}x")


def check_agreement():
    a = otfs_like_matrix(512, 8, seed=1)
    factor = fspai(a, zeta=8, eps_f=1e-3)
    pure_out = _pure.fspai_factor(
        a.shape[0], a.indptr.astype(np.int64), a.indices.astype(np.int64),
        a.data, a.diag, 8, 1e-3)
    same_pattern = (np.array_equal(factor.indptr, pure_out[0])
                    and np.array_equal(factor.indices, pure_out[1]))
    close = np.allclose(factor.data, pure_out[2], rtol=1e-12, atol=1e-14)
    print(f"backend agreement: pattern={'ok' if same_pattern else 'MISMATCH'} "
          f"values={'ok' if close else 'MISMATCH'}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3,
                        help="timing repetitions, best-of (default 3)")
    args = parser.parse_args()
    if _core is None:
        print("compiled backend not built; timing pure backend only")
    check_agreement()
    bench_fspai(args.repeat)
    bench_bcjr(args.repeat)


if __name__ == "__main__":
    main()
