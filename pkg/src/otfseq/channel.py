"""Doubly dispersive channel: sampling, application, and matrix forms.

Each propagation path has a complex gain, an integer delay tap ``l``, an
integer Doppler tap ``k`` and (optionally) a fractional Doppler remainder
``kappa`` in [-1/2, 1/2].  The received time-domain sample is

    y(t) = sum_p h_p * exp(j*2*pi*(k_p+kappa_p)*(t-l_p)/(M*N)) * x([t-l_p] mod M*N)

where the modulo is realized physically by the cyclic prefix: the phase runs
on the true (unwrapped) time difference ``t - l_p``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .grid import OtfsGrid

__all__ = [
    "ChannelStatistics",
    "ChannelRealization",
    "sample_channel",
    "apply_channel",
    "build_time_matrix",
    "build_dd_matrix",
]

# Dense constructions are test/diagnostic oracles, not simulation paths.
DENSE_SIZE_LIMIT = 4096


@dataclass(frozen=True)
class ChannelStatistics:
    """Path-count and dispersion limits for random channel draws.

    Gains are CN(0, 1/n_paths) (uniform power profile, unit total power).
    Integer mode draws Doppler taps uniformly from {-k_max, ..., k_max};
    fractional mode draws k+kappa = k_max*cos(theta) with theta ~ U[-pi, pi]
    (Jakes) and splits it into the nearest tap and a remainder in [-1/2, 1/2].
    """

    n_paths: int
    l_max: int
    k_max: int
    fractional: bool = False

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be positive")
        if self.l_max < 0 or self.k_max < 0:
            raise ValueError("dispersion limits must be nonnegative")


@dataclass(frozen=True)
class ChannelRealization:
    """One channel draw: per-path gains, delay taps, Doppler taps, remainders."""

    gains: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray
    doppler_fracs: np.ndarray = field(default=None)

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=np.complex128)
        delays = np.asarray(self.delays, dtype=np.int64)
        dopplers = np.asarray(self.dopplers, dtype=np.int64)
        if self.doppler_fracs is None:
            fracs = np.zeros(gains.shape[0])
        else:
            fracs = np.asarray(self.doppler_fracs, dtype=np.float64)
        if not (gains.shape == delays.shape == dopplers.shape == fracs.shape):
            raise ValueError("per-path arrays must share one shape")
        if gains.ndim != 1 or gains.size == 0:
            raise ValueError("need at least one path")
        if np.any(delays < 0):
            raise ValueError("delay taps must be nonnegative")
        if np.any(np.abs(fracs) > 0.5):
            raise ValueError("fractional Doppler must lie in [-1/2, 1/2]")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "dopplers", dopplers)
        object.__setattr__(self, "doppler_fracs", fracs)

    @property
    def n_paths(self) -> int:
        return self.gains.shape[0]

    @property
    def is_integer(self) -> bool:
        return bool(np.all(self.doppler_fracs == 0.0))


def sample_channel(stats: ChannelStatistics, rng: np.random.Generator) -> ChannelRealization:
    """Draw one channel realization from the given statistics."""
    p = stats.n_paths
    gains = (rng.standard_normal(p) + 1j * rng.standard_normal(p)) * np.sqrt(0.5 / p)
    delays = rng.integers(0, stats.l_max + 1, size=p)
    if stats.fractional:
        nu = stats.k_max * np.cos(rng.uniform(-np.pi, np.pi, size=p))
        dopplers = np.rint(nu).astype(np.int64)
        fracs = nu - dopplers
    else:
        dopplers = rng.integers(-stats.k_max, stats.k_max + 1, size=p)
        fracs = np.zeros(p)
    return ChannelRealization(gains, delays, dopplers, fracs)


def _validate_grid_channel(grid: OtfsGrid, chan: ChannelRealization):
    if int(chan.delays.max()) >= grid.m:
        raise ValueError("delay taps must be smaller than the number of delay bins")
    if int(chan.delays.max()) > grid.cp_len:
        raise ValueError("cp_len must cover the maximum delay tap")


def apply_channel(
    grid: OtfsGrid,
    chan: ChannelRealization,
    x_cp: np.ndarray,
    n0: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Pass a CP-prefixed time frame through the channel, adding CN(0, n0) noise.

    Samples preceding the cyclic prefix are taken as zero; they only touch the
    prefix part of the output, which the receiver discards.
    """
    _validate_grid_channel(grid, chan)
    x_cp = np.asarray(x_cp, dtype=np.complex128)
    mn, cp = grid.size, grid.cp_len
    if x_cp.shape != (mn + cp,):
        raise ValueError(f"expected {mn + cp} samples, got shape {x_cp.shape}")
    if n0 < 0:
        raise ValueError("noise power must be nonnegative")

    t = np.arange(mn + cp) - cp  # body time runs 0..mn-1; the prefix sits at t < 0
    y = np.zeros(mn + cp, dtype=np.complex128)
    for h, l, k, kappa in zip(chan.gains, chan.delays, chan.dopplers, chan.doppler_fracs):
        delayed = np.zeros(mn + cp, dtype=np.complex128)
        if l == 0:
            delayed[:] = x_cp
        else:
            delayed[l:] = x_cp[:-l]
        y += h * np.exp(2j * np.pi * (k + kappa) * (t - l) / mn) * delayed
    if n0 > 0:
        if rng is None:
            raise ValueError("rng required when n0 > 0")
        y += np.sqrt(n0 / 2) * (rng.standard_normal(mn + cp) + 1j * rng.standard_normal(mn + cp))
    return y


def build_time_matrix(grid: OtfsGrid, chan: ChannelRealization) -> np.ndarray:
    """Dense time-domain channel matrix over the frame body (diagnostic).

    Row ``t`` holds h_p * exp(j*2*pi*(k_p+kappa_p)*(t-l_p)/(M*N)) at column
    ``(t-l_p) mod M*N``.  For integer Doppler this is exactly
    sum_p h_p Pi^{l_p} Delta^{k_p}.
    """
    _validate_grid_channel(grid, chan)
    mn = grid.size
    if mn > DENSE_SIZE_LIMIT:
        raise ValueError(f"dense channel matrix limited to {DENSE_SIZE_LIMIT} symbols")
    t = np.arange(mn)
    h_t = np.zeros((mn, mn), dtype=np.complex128)
    for h, l, k, kappa in zip(chan.gains, chan.delays, chan.dopplers, chan.doppler_fracs):
        cols = (t - l) % mn
        h_t[t, cols] += h * np.exp(2j * np.pi * (k + kappa) * (t - l) / mn)
    return h_t


def build_dd_matrix(grid: OtfsGrid, chan: ChannelRealization, trunc: int = 10) -> sp.csc_matrix:
    """Sparse delay-Doppler channel matrix.

    Integer Doppler gives exactly one entry per (row, path).  Fractional
    Doppler spreads each entry across the Doppler axis with a Dirichlet
    kernel; only the ``2*trunc + 1`` taps around the peak are kept (all N
    when ``2*trunc + 1 >= N``, which reproduces the dense conjugation
    ``(F_N kron I_M) H_T (F_N^H kron I_M)`` exactly).
    """
    _validate_grid_channel(grid, chan)
    if trunc < 0:
        raise ValueError("trunc must be nonnegative")
    m, n, mn = grid.m, grid.n, grid.size
    a = np.arange(mn)
    ka, la = a // m, a % m

    rows, cols, vals = [], [], []
    for h, l, k, kappa in zip(chan.gains, chan.delays, chan.dopplers, chan.doppler_fracs):
        lb = (la - l) % m
        wrap = la < l  # these rows read the path's input from the cyclic copy
        base = h * np.exp(2j * np.pi * (k + kappa) * (la - l) / mn)
        if kappa == 0.0:
            offsets = (0,)
        elif 2 * trunc + 1 >= n:
            offsets = range(-(n // 2), n - n // 2)
        else:
            offsets = range(-trunc, trunc + 1)
        for d in offsets:
            kb = (ka - k + d) % n
            if kappa == 0.0:
                dirichlet = 1.0
            else:
                dirichlet = (np.exp(2j * np.pi * kappa) - 1.0) / (
                    n * (np.exp(2j * np.pi * (d + kappa) / n) - 1.0)
                )
            v = base * dirichlet
            v = np.where(wrap, v * np.exp(-2j * np.pi * kb / n), v)
            rows.append(a)
            cols.append(lb + m * kb)
            vals.append(v)

    h_dd = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mn, mn),
    ).tocsc()
    h_dd.sum_duplicates()
    h_dd.eliminate_zeros()
    return h_dd
