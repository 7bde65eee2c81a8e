"""End-to-end acceptance suite.

One test per acceptance criterion, each printing a single summary line.
The first nine criteria plus the coding check run unconditionally; the
error-rate gain criterion runs a reduced monotone-improvement check by
default and the full dB-gain measurement when OTFSEQ_FULL_ACCEPT=1.
"""

import os

import numpy as np
import pytest

from oracles import map_bit_llrs_exhaustive, mmse_estimate_dense
from otfseq import harness
from otfseq.channel import ChannelRealization, ChannelStatistics, build_dd_matrix, sample_channel
from otfseq.coding import CodeConfig, conv_encode, siso_decode
from otfseq.config import parse_config
from otfseq.equalizer import (
    EqualizerConfig,
    SoftSymbolState,
    build_covariance,
    equalize_frame,
    estimate_initial,
    estimate_subsequent,
)
from otfseq.fspai import fspai, kaporin_number
from otfseq.gmres import gmres
from otfseq.grid import OtfsGrid
from otfseq.sparse import degree_cdf

FULL_ACCEPT = bool(os.environ.get("OTFSEQ_FULL_ACCEPT"))


def report(num, name, detail):
    print(f"criterion {num:02d} [{name}]: PASS ({detail})")


def small_system(seed, m=8, n=4, paths=3, ebn0=8.0):
    cfg = parse_config(
        f"m = {m}\nn = {n}\ncp_len = {m // 2}\npaths = {paths}\n"
        f"l_max = 3\nk_max = 2\nmax_cycles = 64\nmaster_seed = {seed}\n"
    )
    return harness.transmit_frame(cfg, 0, 0, ebn0, "turbo")


def test_criterion_01_small_scale_oracle_equivalence():
    eps_g = 1e-3
    cfg_init = EqualizerConfig(j_max=3, eps_g=eps_g, max_cycles=64)
    cfg_exact = EqualizerConfig(j_max=3, eps_g=eps_g, max_cycles=64,
                                zeta=32, eps_f=0.0, eps_a=0.0, eps_d=-1.0)
    worst_init = worst_sub = 0.0
    rng = np.random.default_rng(2026)
    for seed in range(100):
        h, y, _, n0 = small_system(seed)
        hd = h.toarray()
        est = estimate_initial(h, y, n0, cfg_init)
        want, _ = mmse_estimate_dense(hd, y, np.zeros(32, complex), np.ones(32), n0)
        worst_init = max(worst_init,
                         np.linalg.norm(est.x_hat - want) / np.linalg.norm(want))
        state = SoftSymbolState(
            m=0.4 * (rng.standard_normal(32) + 1j * rng.standard_normal(32)),
            v=rng.uniform(0.05, 1.0, 32),
        )
        sub = estimate_subsequent(h, y, n0, state, cfg_exact)
        want_x, want_xi = mmse_estimate_dense(hd, y, state.m, state.v, n0)
        worst_sub = max(worst_sub, np.abs(sub.x_hat - want_x).max(),
                        np.abs(sub.xi - want_xi).max())
    assert worst_init <= 10 * eps_g
    assert worst_sub <= 1e-6
    report(1, "small-scale oracle equivalence",
           f"initial rel err {worst_init:.2e} <= {10 * eps_g:.0e}, "
           f"exact-pattern err {worst_sub:.2e} <= 1e-6")


def test_criterion_02_single_iteration_matches_dense_lmmse():
    cfg = parse_config(
        "m = 64\nn = 32\npaths = 8\nmaster_seed = 11\n"
        "eps_g = 1e-10\nj_max = 64\nmax_cycles = 64\nn_outer = 1\n"
    )
    eq = cfg.equalizer()
    frames = 0
    for point_idx, ebn0 in enumerate((2.0, 6.0, 10.0)):
        for frame_idx in range(3):
            h, y, _, n0 = harness.transmit_frame(cfg, point_idx, frame_idx,
                                                 ebn0, "turbo")
            turbo = equalize_frame(y, h, n0, eq, code_cfg=cfg.code(),
                                   interleaver_seed=cfg.master_seed, mode="turbo")
            oracle = equalize_frame(y, h, n0, eq, code_cfg=cfg.code(),
                                    interleaver_seed=cfg.master_seed,
                                    mode="lmmse-oracle")
            assert np.array_equal(turbo.decisions, oracle.decisions)
            frames += 1
    report(2, "single-iteration equals dense LMMSE",
           f"identical decisions on {frames} frames across 3 sweep points")


@pytest.fixture(scope="module")
def residual_data():
    cfg = parse_config(
        "m = 64\nn = 32\npaths = 8\nebn0_db = 6, 10\nrealizations = 100\n"
        "eps_g = 1e-6\nfull_gmres = true\nmaster_seed = 7\n"
    )
    return {ebn0: harness.residual_sweep(cfg, idx, ebn0)
            for idx, ebn0 in enumerate(cfg.ebn0_db)}


def test_criterion_03_residual_below_chebyshev_bound(residual_data):
    checked = violations = 0
    for sweep in residual_data.values():
        for t_y, t_h, bound in zip(sweep.traces_y, sweep.traces_h, sweep.bounds):
            violations += int(np.any(t_y > bound[: len(t_y)]))
            violations += int(np.any(t_h > bound[: len(t_h)]))
            checked += len(t_y) + len(t_h)
    assert violations == 0
    report(3, "residuals within Chebyshev envelope",
           f"{checked} iteration checks over 200 realizations, 0 violations")


def test_criterion_04_low_snr_converges_faster(residual_data):
    def to_threshold(traces):
        return [int(np.argmax(np.asarray(t) <= 1e-3)) + 1 for t in traces]

    med = {ebn0: np.median(to_threshold(sweep.traces_y))
           for ebn0, sweep in residual_data.items()}
    med_h = {ebn0: np.median(to_threshold(sweep.traces_h))
             for ebn0, sweep in residual_data.items()}
    assert med[6.0] < med[10.0]
    report(4, "fewer iterations at lower SNR",
           f"median iterations to 1e-3: {med[6.0]:.0f} at 6 dB vs "
           f"{med[10.0]:.0f} at 10 dB (column solve {med_h[6.0]:.0f} "
           f"vs {med_h[10.0]:.0f})")


def test_criterion_05_unit_restart_always_converges():
    cfg = parse_config(
        "m = 16\nn = 8\ncp_len = 6\npaths = 4\nl_max = 4\nk_max = 3\n"
        "master_seed = 13\n"
    )
    n = cfg.grid().size
    worst_iters = 0
    for r in range(100):
        h, y, _, n0 = harness.transmit_frame(cfg, 0, r, 6.0, "turbo")
        a = build_covariance(h, np.ones(n), n0)
        rep = gmres(a, y, j_max=1, eps_g=1e-3, max_cycles=10 * n)
        assert rep.converged
        trace = np.asarray(rep.residual_trace)
        assert len(trace) <= 10 * n
        assert np.all(np.diff(trace) < 0)
        worst_iters = max(worst_iters, len(trace))
    report(5, "unit-restart convergence",
           f"100 systems converged to 1e-3, worst case {worst_iters} "
           f"iterations (cap {10 * n}), all cycle residuals strictly decreasing")


def test_criterion_06_scaling_factor_variance_small():
    cfg = parse_config(
        "m = 64\nn = 32\npaths = 8\nrealizations = 100\npaths_sweep = 4, 8, 16\n"
        "ebn0_db = -10, -6, -3, 0, 3, 6, 10, 14, 20\nmaster_seed = 17\n"
    )
    table = harness.xivar_table(cfg)
    peaks = {p: float(np.max(table[p])) for p in cfg.paths_sweep}
    for p, peak in peaks.items():
        assert peak < 1e-4, f"paths={p} peak variance {peak:.3e}"
    report(6, "scaling-factor variance",
           "peak variance over sweep: "
           + ", ".join(f"P={p}: {v:.2e}" for p, v in peaks.items())
           + " (all < 1e-4, 100 realizations each)")


def test_criterion_07_covariance_column_bound():
    rng = np.random.default_rng(19)
    grid = OtfsGrid(16, 8, cp_len=6)
    worst = {}
    for paths in range(2, 9):
        stats = ChannelStatistics(paths, l_max=5, k_max=3)
        cap = paths * (paths - 1) + 1
        seen = 0
        for _ in range(100):
            chan = sample_channel(stats, rng)
            h = build_dd_matrix(grid, chan)
            a = build_covariance(h, np.ones(grid.size), 0.1)
            seen = max(seen, int(np.diff(a.indptr).max()))
        assert seen <= cap
        worst[paths] = (seen, cap)
    example = ChannelRealization(
        gains=np.array([1.0, 0.8 * np.exp(0.3j), 1.3 * np.exp(-1.1j)]),
        delays=np.array([0, 1, 2]),
        dopplers=np.array([-1, 1, 1]),
    )
    h = build_dd_matrix(OtfsGrid(4, 3, cp_len=2), example)
    a = build_covariance(h, np.ones(12), 0.1)
    assert np.array_equal(a.degrees(), np.full(12, 6))
    report(7, "covariance column bound",
           "700 draws within the pairwise-offset cap; "
           "3-path example on the 4x3 grid has all degrees exactly 6")


def test_criterion_08_factor_quality():
    rng = np.random.default_rng(23)
    diag = np.diag(rng.uniform(0.5, 3.0, 6))
    from otfseq.sparse import SparseHermitianMatrix

    exact = fspai(SparseHermitianMatrix(diag), zeta=6, eps_f=0.0)
    np.testing.assert_allclose(exact.toarray(),
                               np.diag(1.0 / np.sqrt(np.diag(diag))), atol=1e-14)
    worst = 0.0
    for n in (2, 8):
        for trial in range(20):
            x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            a = SparseHermitianMatrix(x @ x.conj().T + n * np.eye(n))
            factor = fspai(a, zeta=n, eps_f=0.0)
            ld = factor.toarray()
            resid = np.abs(ld @ ld.conj().T @ a.toarray() - np.eye(n)).max()
            worst = max(worst, resid)
    assert worst < 1e-8
    x = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    a = SparseHermitianMatrix(x @ x.conj().T + 12 * np.eye(12))
    numbers = [kaporin_number(a, fspai(a, zeta=z, eps_f=0.0)) for z in range(13)]
    assert all(k >= 1.0 - 1e-12 for k in numbers)
    assert all(b <= a_ * (1 + 1e-9) for a_, b in zip(numbers, numbers[1:]))
    report(8, "approximate-inverse factor quality",
           f"diagonal exact, worst full-budget residual {worst:.2e} < 1e-8, "
           f"quality number {numbers[0]:.3f} -> {numbers[-1]:.3f} nonincreasing")


def test_criterion_09_factor_sparsity_levels():
    cfg = parse_config(
        "m = 64\nn = 32\npaths = 8\nn_outer = 2\nmax_cycles = 64\n"
        "master_seed = 29\n"
    )
    f0 = {}
    for ebn0 in (10.0, 6.0):
        vals = []
        for frame in range(20):
            out = harness.simulate_frame(cfg, 0, frame, ebn0, mode="turbo",
                                         keep_factors=True)
            vals.append(degree_cdf(out.factors[0]).at(0))
        f0[ebn0] = float(np.mean(vals))
    assert f0[10.0] >= 0.9
    assert f0[6.0] >= 0.3
    report(9, "factor sparsity levels",
           f"second-iteration diagonal fraction {f0[10.0]:.3f} at 10 dB "
           f"(>= 0.9) and {f0[6.0]:.3f} at 6 dB (>= 0.3), 20 frames each")


def _final_iteration_ber(cfg, point_idx, ebn0, mode):
    outcomes = harness.run_point(cfg, point_idx, ebn0, mode=mode)
    bits = sum(o.bits for o in outcomes)
    first = sum(o.errors[0] for o in outcomes)
    last = sum(o.errors[-1] for o in outcomes)
    return first / bits, last / bits, len(outcomes)


def _crossing_db(curve, target):
    """Log-linear interpolated Eb/N0 where the curve crosses target."""
    for (db0, ber0), (db1, ber1) in zip(curve, curve[1:]):
        if ber0 >= target >= ber1 and ber1 > 0:
            frac = (np.log10(ber0) - np.log10(target)) / (
                np.log10(ber0) - np.log10(ber1))
            return db0 + frac * (db1 - db0)
    raise AssertionError(f"curve never brackets {target}: {curve}")


def test_criterion_10_iteration_and_coding_gains():
    if not FULL_ACCEPT:
        cfg = parse_config(
            "m = 64\nn = 32\npaths = 4\nmax_cycles = 64\nmaster_seed = 31\n"
            "ebn0_db = 5, 7\nmin_errors = 1000000\nmax_frames = 300\n"
        )
        frames_total = 0
        details = []
        for point_idx, ebn0 in enumerate(cfg.ebn0_db):
            first, last, frames = _final_iteration_ber(cfg, point_idx, ebn0,
                                                       "turbo")
            assert last <= first, f"{ebn0} dB: {last} > {first}"
            frames_total += frames
            details.append(f"{ebn0:g} dB: {first:.2e} -> {last:.2e}")
        assert frames_total >= 200
        report(10, "iteration gain (reduced)",
               f"5-iteration BER <= 1-iteration BER at every point over "
               f"{frames_total} frames ({'; '.join(details)})")
        return

    base = ("m = 64\nn = 32\npaths = 4\nmax_cycles = 64\nmaster_seed = 31\n"
            "min_errors = 200\nmax_frames = 2000\nebn0_db = {pts}\n")

    def curve(mode, points, pick_last):
        cfg = parse_config(base.format(pts=", ".join(str(p) for p in points))
                           + f"mode = {mode}\n")
        out = []
        for idx, ebn0 in enumerate(points):
            first, last, _ = _final_iteration_ber(cfg, idx, ebn0, mode)
            out.append((ebn0, last if pick_last else first))
            if out[-1][1] < 2e-5:
                break
        return out

    uncoded_pts = (8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0)
    multi = curve("uncoded", uncoded_pts, pick_last=True)
    single = curve("uncoded", uncoded_pts, pick_last=False)
    gain_iter = _crossing_db(single, 1e-3) - _crossing_db(multi, 1e-3)
    assert 3.0 <= gain_iter <= 5.0, f"iteration gain {gain_iter:.2f} dB"

    coded_pts = (4.0, 5.0, 6.0, 7.0, 8.0, 10.0, 12.0)
    turbo = curve("turbo", coded_pts, pick_last=True)
    gain_code = _crossing_db(multi, 1e-4) - _crossing_db(turbo, 1e-4)
    assert 1.0 <= gain_code <= 3.0, f"coding gain {gain_code:.2f} dB"
    report(10, "iteration and coding gains (full)",
           f"iteration gain {gain_iter:.2f} dB (4 +- 1), "
           f"coding gain {gain_code:.2f} dB (2 +- 1)")


def test_criterion_11_fractional_doppler_near_oracle():
    base = (
        "m = 32\nn = 16\npaths = 8\nfractional = true\nmax_cycles = 64\n"
        "master_seed = 37\nmin_errors = 80\nmax_frames = 600\n"
        "ebn0_db = 6, 8, 10, 12, 14\n"
    )

    def curve(mode):
        cfg = parse_config(base + f"mode = {mode}\n")
        out = []
        for idx, ebn0 in enumerate(cfg.ebn0_db):
            _, last, _ = _final_iteration_ber(cfg, idx, ebn0, mode)
            out.append((ebn0, last))
            if last < 2e-4:
                break
        return out

    turbo = curve("turbo")
    oracle = curve("immse-oracle")
    loss = _crossing_db(turbo, 1e-3) - _crossing_db(oracle, 1e-3)
    assert loss <= 0.5, f"sparsified loss {loss:.3f} dB"
    report(11, "fractional-Doppler parity",
           f"sparsified receiver loses {loss:.3f} dB (<= 0.5) vs the dense "
           f"per-symbol oracle at BER 1e-3")


def test_criterion_12_coding_stack():
    code = CodeConfig()
    impulse = conv_encode(code, np.array([1, 0, 0]))
    np.testing.assert_array_equal(impulse, [1, 1, 0, 1, 1, 1, 0, 0, 0, 0])
    rng = np.random.default_rng(41)
    worst = 0.0
    for _ in range(5):
        la = rng.normal(scale=2.0, size=code.n_coded(8))
        le, _ = siso_decode(code, la, llr_clip=1e9)
        app = le + la
        want_coded, _ = map_bit_llrs_exhaustive(la, 8)
        worst = max(worst, np.abs(app - want_coded).max())
    assert worst <= 1e-9
    report(12, "coding stack",
           f"impulse response matches hand values; exhaustive-enumeration "
           f"APP max deviation {worst:.2e} <= 1e-9")
