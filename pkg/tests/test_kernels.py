"""Compiled and pure kernels must agree: identical structure decisions,
values equal to rounding, LLRs equal to rounding."""

import numpy as np
import pytest

from otfseq._kernels import _pure

_core = pytest.importorskip("otfseq._kernels._core")


def random_hpd_csc(rng, n, density):
    import scipy.sparse as sp

    h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    mask = rng.random((n, n)) < density
    h = np.where(mask | mask.T, h, 0)
    ad = h @ h.conj().T + n * np.eye(n)
    csc = sp.csc_matrix(ad)
    csc.sort_indices()
    return (
        csc.indptr.astype(np.int64),
        csc.indices.astype(np.int64),
        csc.data.astype(np.complex128),
        np.ascontiguousarray(csc.diagonal().real),
    )


def test_fspai_backends_agree():
    rng = np.random.default_rng(11)
    for trial in range(15):
        n = int(rng.integers(4, 48))
        zeta = int(rng.integers(0, 9))
        indptr, indices, data, diag = random_hpd_csc(rng, n, rng.uniform(0.1, 1.0))
        got = _core.fspai_factor(n, indptr, indices, data, diag, zeta, 1e-6)
        want = _pure.fspai_factor(n, indptr, indices, data, diag, zeta, 1e-6)
        np.testing.assert_array_equal(got[0], want[0])
        np.testing.assert_array_equal(got[1], want[1])
        np.testing.assert_allclose(got[2], want[2], rtol=1e-12, atol=1e-14)


def test_fspai_backends_agree_on_eps_f_stop():
    rng = np.random.default_rng(12)
    indptr, indices, data, diag = random_hpd_csc(rng, 24, 0.4)
    for eps_f in (0.0, 1e-3, 1.0, 1e9):
        got = _core.fspai_factor(24, indptr, indices, data, diag, 6, eps_f)
        want = _pure.fspai_factor(24, indptr, indices, data, diag, 6, eps_f)
        np.testing.assert_array_equal(got[0], want[0])
        np.testing.assert_array_equal(got[1], want[1])
        np.testing.assert_allclose(got[2], want[2], rtol=1e-12, atol=1e-14)


def _code_tables():
    # 4-state rate-1/2 feedforward trellis, generators 101 and 111
    next_state = np.empty((4, 2), dtype=np.int64)
    out_bits = np.empty((4, 2, 2), dtype=np.int8)
    for s in range(4):
        for u in range(2):
            window = (u << 2) | s
            next_state[s, u] = (u << 1) | (s >> 1)
            out_bits[s, u, 0] = bin(window & 0b101).count("1") % 2
            out_bits[s, u, 1] = bin(window & 0b111).count("1") % 2
    return next_state, out_bits


def test_bcjr_backends_agree():
    rng = np.random.default_rng(13)
    next_state, out_bits = _code_tables()
    for _ in range(10):
        steps = int(rng.integers(3, 80))
        la = rng.normal(scale=4.0, size=2 * steps)
        gc, gi = _core.bcjr(la, next_state, out_bits)
        pc, pi = _pure.bcjr(la, next_state, out_bits)
        np.testing.assert_allclose(gc, pc, rtol=1e-11, atol=1e-11)
        np.testing.assert_allclose(gi, pi, rtol=1e-11, atol=1e-11)


def test_bcjr_backends_agree_with_extreme_priors():
    rng = np.random.default_rng(14)
    next_state, out_bits = _code_tables()
    la = rng.choice([-30.0, 30.0, 0.0], size=40)
    gc, gi = _core.bcjr(la, next_state, out_bits)
    pc, pi = _pure.bcjr(la, next_state, out_bits)
    np.testing.assert_allclose(gc, pc, rtol=1e-11, atol=1e-11)
    np.testing.assert_allclose(gi, pi, rtol=1e-11, atol=1e-11)
