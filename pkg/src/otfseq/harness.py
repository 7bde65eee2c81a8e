"""Monte Carlo experiment drivers.

Each ``run_*`` function consumes a :class:`~otfseq.config.SimConfig` and
returns CSV text reproducing one of the standard measurement campaigns:
error-rate sweeps, solver residual traces with their Chebyshev bounds,
the variance of the shared MMSE scaling factor, and factor sparsity
levels. Every random draw descends from ``SeedSequence([master_seed,
point_index, frame_index])``, with channel, payload, and noise taking
disjoint child streams, so output is reproducible bit for bit and
independent of the worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .channel import apply_channel, build_dd_matrix, sample_channel
from .coding import conv_encode, interleave, qpsk_map
from .config import SimConfig, config_hash
from .equalizer import build_covariance, equalize_frame
from .errors import ConfigError
from .gmres import chebyshev_bound, gmres
from .grid import add_cp, demodulate, modulate, strip_cp
from .sparse import degree_cdf

_DENSE_EIG_LIMIT = 4096


def noise_from_ebn0(ebn0_db: float, rate: float, bits_per_symbol: int) -> float:
    """One-sided noise power for unit symbol energy at the given Eb/N0."""
    if rate <= 0 or bits_per_symbol <= 0:
        raise ValueError("rate and bits_per_symbol must be positive")
    return 1.0 / (rate * bits_per_symbol * 10.0 ** (ebn0_db / 10.0))


def frame_streams(cfg: SimConfig, point_idx: int, frame_idx: int):
    """Disjoint (channel, payload, noise) generators for one frame."""
    seq = np.random.SeedSequence([cfg.master_seed, point_idx, frame_idx])
    return tuple(np.random.default_rng(child) for child in seq.spawn(3))


def transmit_frame(cfg: SimConfig, point_idx: int, frame_idx: int,
                   ebn0_db: float, mode: str):
    """Generate one frame end to end; returns (h, y, ref_bits, n0)."""
    chan_rng, bits_rng, noise_rng = frame_streams(cfg, point_idx, frame_idx)
    grid = cfg.grid()
    chan = sample_channel(cfg.stats(), chan_rng)
    h = build_dd_matrix(grid, chan, trunc=cfg.trunc)
    rate = 1.0 if mode == "uncoded" else cfg.code().rate
    n0 = noise_from_ebn0(ebn0_db, rate, 2)

    if mode == "uncoded":
        ref = bits_rng.integers(0, 2, 2 * grid.size)
        x = qpsk_map(ref)
    else:
        ref = bits_rng.integers(0, 2, cfg.code().n_info(2 * grid.size))
        x = qpsk_map(interleave(cfg.master_seed, conv_encode(cfg.code(), ref)))

    sent = add_cp(grid, modulate(grid, x))
    received = apply_channel(grid, chan, sent, n0=n0, rng=noise_rng)
    y = demodulate(grid, strip_cp(grid, received))
    return h, y, ref, n0


@dataclass(frozen=True)
class FrameOutcome:
    """Per-outer-iteration error counts for one simulated frame."""

    errors: tuple[int, ...]
    bits: int
    factors: tuple


def simulate_frame(
    cfg: SimConfig,
    point_idx: int,
    frame_idx: int,
    ebn0_db: float,
    mode: str | None = None,
    keep_factors: bool = False,
) -> FrameOutcome:
    """Transmit, propagate, and equalize one frame; count bit errors."""
    mode = cfg.mode if mode is None else mode
    h, y, ref, n0 = transmit_frame(cfg, point_idx, frame_idx, ebn0_db, mode)
    result = equalize_frame(
        y, h, n0, cfg.equalizer(), code_cfg=cfg.code(),
        interleaver_seed=cfg.master_seed, mode=mode,
    )
    errors = tuple(int(c) for c in (result.decisions != ref).sum(axis=1))
    factors = tuple(result.factors) if keep_factors else ()
    return FrameOutcome(errors=errors, bits=int(ref.size), factors=factors)


def _map_ordered(fn, argses, threads: int):
    if threads <= 1:
        return [fn(a) for a in argses]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, argses, chunksize=1))


def _simulate_args(args):
    cfg, point_idx, frame_idx, ebn0, mode, keep = args
    return simulate_frame(cfg, point_idx, frame_idx, ebn0, mode=mode,
                          keep_factors=keep)


def run_point(
    cfg: SimConfig,
    point_idx: int,
    ebn0_db: float,
    threads: int = 1,
    mode: str | None = None,
    keep_factors: bool = False,
) -> list[FrameOutcome]:
    """Simulate frames for one sweep point under the stopping rule.

    The included set is the smallest frame prefix whose cumulative
    final-iteration error count reaches ``min_errors`` (capped at
    ``max_frames``), determined by scanning outcomes in frame order, so
    the result does not depend on ``threads`` or on block sizing.
    """
    outcomes: list[FrameOutcome] = []
    cum = 0
    next_frame = 0
    block = max(8, 8 * max(threads, 1))
    while next_frame < cfg.max_frames:
        count = min(block, cfg.max_frames - next_frame)
        argses = [
            (cfg, point_idx, f, ebn0_db, mode, keep_factors)
            for f in range(next_frame, next_frame + count)
        ]
        for out in _map_ordered(_simulate_args, argses, threads):
            outcomes.append(out)
            cum += out.errors[-1]
            if cum >= cfg.min_errors:
                return outcomes
        next_frame += count
    return outcomes


# ---------------------------------------------------------------- error rate


@dataclass(frozen=True)
class BerRecord:
    ebn0_db: float
    outer_iteration: int
    bits_sent: int
    bit_errors: int
    ber: float
    frames: int
    wall_seconds: float


def ber_records(cfg: SimConfig, threads: int = 1) -> list[BerRecord]:
    records = []
    for point_idx, ebn0 in enumerate(cfg.ebn0_db):
        start = time.perf_counter()
        outcomes = run_point(cfg, point_idx, ebn0, threads=threads)
        wall = time.perf_counter() - start
        frames = len(outcomes)
        bits = sum(o.bits for o in outcomes)
        for it in range(len(outcomes[0].errors)):
            errs = sum(o.errors[it] for o in outcomes)
            records.append(BerRecord(
                ebn0_db=ebn0,
                outer_iteration=it + 1,
                bits_sent=bits,
                bit_errors=errs,
                ber=errs / bits,
                frames=frames,
                wall_seconds=wall,
            ))
    return records


def run_ber(cfg: SimConfig, threads: int = 1) -> str:
    header = ("ebn0_db", "outer_iteration", "bits_sent", "bit_errors",
              "ber", "frames", "wall_seconds")
    rows = [
        (_fmt(r.ebn0_db), str(r.outer_iteration), str(r.bits_sent),
         str(r.bit_errors), _fmt(r.ber), str(r.frames), f"{r.wall_seconds:.3f}")
        for r in ber_records(cfg, threads)
    ]
    return _csv(cfg, header, rows)


# ----------------------------------------------------------------- residuals


@dataclass(frozen=True)
class ResidualSweep:
    """Per-realization residual traces at one sweep point.

    ``traces_y`` solves A f = y (the received frame), ``traces_h`` solves
    A f = h_0 (the first channel column); ``bounds`` holds each
    realization's Chebyshev envelope evaluated at iterations 1..len.
    """

    ebn0_db: float
    traces_y: list[np.ndarray]
    traces_h: list[np.ndarray]
    bounds: list[np.ndarray]


def hpd_extremes(a) -> tuple[float, float]:
    """Extreme eigenvalues of a sparse HPD matrix.

    Dense reduction up to the size limit (iterative extremes are fragile
    when the spectrum clusters at the ends); beyond it, the largest
    magnitude equals the largest eigenvalue by positivity, and the
    smallest comes from shift-invert at zero.
    """
    csc = a.csc
    if csc.shape[0] <= _DENSE_EIG_LIMIT:
        vals = np.linalg.eigvalsh(csc.toarray())
        return float(vals[0]), float(vals[-1])
    top = spla.eigsh(csc, k=1, which="LM", return_eigenvectors=False)
    bot = spla.eigsh(csc, k=1, sigma=0.0, which="LM", return_eigenvectors=False)
    return float(bot[0].real), float(top[0].real)


def _residual_args(args):
    cfg, point_idx, r, ebn0 = args
    h, y, _, n0 = transmit_frame(cfg, point_idx, r, ebn0, cfg.mode)
    a = build_covariance(h, np.ones(h.shape[0]), n0)
    if cfg.full_gmres:
        j_max, cycles = h.shape[0], 1
    else:
        j_max, cycles = cfg.j_max, cfg.max_cycles
    rep_y = gmres(a, y, j_max=j_max, eps_g=cfg.eps_g, max_cycles=cycles)
    h0 = h[:, [0]].toarray().ravel()
    rep_h = gmres(a, h0, j_max=j_max, eps_g=cfg.eps_g, max_cycles=cycles)
    lmin, lmax = hpd_extremes(a)
    steps = max(len(rep_y.residual_trace), len(rep_h.residual_trace))
    bound = np.array([chebyshev_bound(lmin, lmax, j) for j in range(1, steps + 1)])
    return (np.asarray(rep_y.residual_trace), np.asarray(rep_h.residual_trace),
            bound)


def residual_sweep(cfg: SimConfig, point_idx: int, ebn0_db: float,
                   threads: int = 1) -> ResidualSweep:
    argses = [(cfg, point_idx, r, ebn0_db) for r in range(cfg.realizations)]
    parts = _map_ordered(_residual_args, argses, threads)
    return ResidualSweep(
        ebn0_db=ebn0_db,
        traces_y=[p[0] for p in parts],
        traces_h=[p[1] for p in parts],
        bounds=[p[2] for p in parts],
    )


def _pad_mean(traces: list[np.ndarray], length: int) -> np.ndarray:
    acc = np.zeros(length)
    for t in traces:
        acc += np.concatenate([t, np.full(length - len(t), t[-1])])
    return acc / len(traces)


def run_residuals(cfg: SimConfig, threads: int = 1) -> str:
    header = ("ebn0_db", "inner_iteration", "residual_y", "residual_h",
              "chebyshev_bound")
    rows = []
    for point_idx, ebn0 in enumerate(cfg.ebn0_db):
        sweep = residual_sweep(cfg, point_idx, ebn0, threads=threads)
        length = max(
            max(len(t) for t in sweep.traces_y),
            max(len(t) for t in sweep.traces_h),
        )
        mean_y = _pad_mean(sweep.traces_y, length)
        mean_h = _pad_mean(sweep.traces_h, length)
        # each realization's envelope freezes at its own stopping point so
        # padded (converged) trace values stay below the padded envelope
        capped = []
        for t_y, t_h, b in zip(sweep.traces_y, sweep.traces_h, sweep.bounds):
            stop = max(len(t_y), len(t_h))
            capped.append(np.concatenate([b[:stop],
                                          np.full(length - stop, b[stop - 1])]))
        mean_bound = np.mean(capped, axis=0)
        for j in range(length):
            rows.append((_fmt(ebn0), str(j + 1), _fmt(mean_y[j]),
                         _fmt(mean_h[j]), _fmt(mean_bound[j])))
    return _csv(cfg, header, rows)


# ------------------------------------------------------- xi-variance measure


def xi_values(h, n0_list) -> list[np.ndarray]:
    """Exact per-symbol MMSE scaling factors for each noise level.

    Uses one Hermitian eigendecomposition of the Gram matrix H^H H: with
    B = V diag(lam) V^H, the factor vector for noise n0 is
    |V|^2 @ (lam / (lam + n0)).
    """
    gram = (h.getH() @ h).toarray()
    lam, vec = sla.eigh(gram, driver="evd", check_finite=False)
    lam = np.maximum(lam.real, 0.0)
    weights = np.abs(vec) ** 2
    return [weights @ (lam / (lam + n0)) for n0 in n0_list]


def _xivar_args(args):
    cfg, p_idx, p, r = args
    seq = np.random.SeedSequence([cfg.master_seed, p_idx, r])
    rng = np.random.default_rng(seq.spawn(1)[0])
    chan = sample_channel(cfg.stats(p), rng)
    h = build_dd_matrix(cfg.grid(), chan, trunc=cfg.trunc)
    n0_list = [noise_from_ebn0(e, cfg.code_rate, 2) for e in cfg.ebn0_db]
    return np.array([float(np.var(xi)) for xi in xi_values(h, n0_list)])


def xivar_table(cfg: SimConfig, threads: int = 1) -> dict[int, np.ndarray]:
    """Mean variance of the scaling factor per path count and sweep point."""
    table = {}
    for p_idx, p in enumerate(cfg.paths_sweep):
        argses = [(cfg, p_idx, p, r) for r in range(cfg.realizations)]
        table[p] = np.mean(_map_ordered(_xivar_args, argses, threads), axis=0)
    return table


def run_xivar(cfg: SimConfig, threads: int = 1) -> str:
    header = ("paths", "ebn0_db", "xi_variance", "realizations")
    table = xivar_table(cfg, threads=threads)
    rows = []
    for p in cfg.paths_sweep:
        for ebn0, var in zip(cfg.ebn0_db, table[p]):
            rows.append((str(p), _fmt(ebn0), _fmt(float(var)),
                         str(cfg.realizations)))
    return _csv(cfg, header, rows)


# ------------------------------------------------------------ sparsity level


def _sparsity_args(args):
    cfg, point_idx, frame_idx, ebn0, mode, thresholds = args
    out = simulate_frame(cfg, point_idx, frame_idx, ebn0, mode=mode,
                         keep_factors=True)
    return np.array([
        [degree_cdf(f).at(d) for d in thresholds] for f in out.factors
    ])


def sparsity_table(cfg: SimConfig, threads: int = 1):
    """Mean degree-CDF values of the approximate-inverse factors.

    Returns (thresholds, {mode: array[point, iteration, threshold]}) for
    thresholds (0, paths // 2, paths); the iteration axis starts at the
    second outer iteration, where the first factor is built.
    """
    thresholds = (0, cfg.paths // 2, cfg.paths)
    table = {}
    for mode in ("turbo", "uncoded"):
        per_point = []
        for point_idx, ebn0 in enumerate(cfg.ebn0_db):
            argses = [
                (cfg, point_idx, r, ebn0, mode, thresholds)
                for r in range(cfg.realizations)
            ]
            per_point.append(np.mean(
                _map_ordered(_sparsity_args, argses, threads), axis=0))
        table[mode] = np.asarray(per_point)
    return thresholds, table


def run_sparsity(cfg: SimConfig, threads: int = 1) -> str:
    if cfg.n_outer < 2:
        raise ConfigError("sparsity report needs n_outer >= 2")
    _, table = sparsity_table(cfg, threads=threads)
    header = ("mode", "ebn0_db", "outer_iteration", "cdf_at_0",
              "cdf_at_half_paths", "cdf_at_paths")
    rows = []
    for mode in ("turbo", "uncoded"):
        for point_idx, ebn0 in enumerate(cfg.ebn0_db):
            for it in range(table[mode].shape[1]):
                vals = table[mode][point_idx, it]
                rows.append((mode, _fmt(ebn0), str(it + 2), _fmt(vals[0]),
                             _fmt(vals[1]), _fmt(vals[2])))
    return _csv(cfg, header, rows)


# ------------------------------------------------------------------- writing


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv(cfg: SimConfig, header, rows) -> str:
    lines = [f"# config {config_hash(cfg)}", ",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"
