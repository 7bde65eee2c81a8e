"""Rate-1/2 convolutional code, seeded interleaver, QPSK map, SISO decoder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

__all__ = [
    "CodeConfig",
    "conv_encode",
    "interleave",
    "deinterleave",
    "qpsk_map",
    "qpsk_alphabet",
    "qpsk_hard_bits",
    "siso_decode",
]

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class CodeConfig:
    """Feedforward convolutional code; defaults to the 4-state (5, 7) code."""

    generators: tuple[int, int] = (0o5, 0o7)
    terminated: bool = True

    def __post_init__(self):
        if len(self.generators) != 2 or any(g <= 0 for g in self.generators):
            raise ValueError("generators must be two positive polynomials")

    @property
    def constraint_length(self) -> int:
        return max(g.bit_length() for g in self.generators)

    @property
    def rate(self) -> float:
        return 0.5

    @property
    def tail_bits(self) -> int:
        return self.constraint_length - 1 if self.terminated else 0

    def n_coded(self, n_info: int) -> int:
        return 2 * (n_info + self.tail_bits)

    def n_info(self, n_coded: int) -> int:
        if n_coded % 2:
            raise ValueError("coded length must be even")
        return n_coded // 2 - self.tail_bits


def _taps(generator: int, memory: int) -> np.ndarray:
    # tap weights MSB-first: current input bit down to the oldest state bit
    return np.array(
        [(generator >> (memory - i)) & 1 for i in range(memory + 1)], dtype=np.int8
    )


def trellis_tables(cfg: CodeConfig) -> tuple[np.ndarray, np.ndarray]:
    """State transition and output tables.

    State s packs the shift register, newest bit in the high position.
    next_state[s, u] is the successor under input u and out_bits[s, u, j]
    the j-th coded bit of that branch.
    """
    memory = cfg.constraint_length - 1
    n_states = 1 << memory
    next_state = np.empty((n_states, 2), dtype=np.int64)
    out_bits = np.empty((n_states, 2, 2), dtype=np.int8)
    for s in range(n_states):
        for u in (0, 1):
            window = (u << memory) | s
            next_state[s, u] = (u << (memory - 1)) | (s >> 1)
            for j, g in enumerate(cfg.generators):
                out_bits[s, u, j] = bin(window & g).count("1") & 1
    return next_state, out_bits


def conv_encode(cfg: CodeConfig, u) -> np.ndarray:
    """Encode; output alternates the two generator streams per input bit."""
    u = np.asarray(u, dtype=np.int8)
    if u.ndim != 1 or np.any((u != 0) & (u != 1)):
        raise ValueError("input must be a flat bit vector")
    memory = cfg.constraint_length - 1
    if cfg.terminated:
        u = np.concatenate([u, np.zeros(memory, dtype=np.int8)])
    out = np.empty(2 * u.size, dtype=np.int8)
    for j, g in enumerate(cfg.generators):
        taps = _taps(g, memory)
        acc = np.zeros(u.size, dtype=np.int8)
        for d, t in enumerate(taps):
            if t:
                acc[d:] ^= u[: u.size - d]
        out[j::2] = acc
    return out


def interleave(perm_seed: int, v: np.ndarray) -> np.ndarray:
    perm = np.random.default_rng(perm_seed).permutation(len(v))
    return np.asarray(v)[perm]


def deinterleave(perm_seed: int, v: np.ndarray) -> np.ndarray:
    perm = np.random.default_rng(perm_seed).permutation(len(v))
    out = np.empty_like(np.asarray(v))
    out[perm] = v
    return out


def qpsk_map(d) -> np.ndarray:
    """Bit pairs to unit-energy symbols: first bit is the real lane."""
    d = np.asarray(d, dtype=np.int8)
    if d.size % 2:
        raise ValueError("need an even number of bits")
    pairs = d.reshape(-1, 2)
    return ((1.0 - 2.0 * pairs[:, 0]) + 1j * (1.0 - 2.0 * pairs[:, 1])) / _SQRT2


def qpsk_alphabet() -> tuple[np.ndarray, np.ndarray]:
    """The four constellation points with their bit labels."""
    labels = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.int8)
    return qpsk_map(labels.ravel()), labels


def qpsk_hard_bits(x: np.ndarray) -> np.ndarray:
    """Nearest-symbol decisions back to bits (inverse of qpsk_map's labels)."""
    x = np.asarray(x)
    bits = np.empty((x.size, 2), dtype=np.int8)
    bits[:, 0] = x.real < 0
    bits[:, 1] = x.imag < 0
    return bits.ravel()


def siso_decode(
    cfg: CodeConfig, la: np.ndarray, llr_clip: float = 30.0
) -> tuple[np.ndarray, np.ndarray]:
    """Log-MAP decode of per-coded-bit prior LLRs (ln P(0)/P(1)).

    Returns (le, u_hat): extrinsic LLRs for every coded bit, a posteriori
    minus a priori, clipped to +-llr_clip, and hard decisions for the
    information bits (tail excluded).
    """
    la = np.ascontiguousarray(la, dtype=np.float64)
    if la.size % 2:
        raise ValueError("prior vector must hold two LLRs per trellis step")
    next_state, out_bits = trellis_tables(cfg)
    app_coded, app_info = _kernels.bcjr(la, next_state, out_bits, cfg.terminated)
    le = np.clip(app_coded - la, -llr_clip, llr_clip)
    n_info = cfg.n_info(la.size)
    u_hat = (app_info[:n_info] < 0).astype(np.int8)
    return le, u_hat
