"""Delay-Doppler frame geometry and (de)modulation.

A frame is a length ``M*N`` complex vector laid out delay-major: entry
``a = l + M*k`` carries the symbol at delay bin ``l`` and Doppler bin ``k``.
All DFTs are unitary, so every mapping here preserves energy exactly.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "OtfsGrid",
    "isfft",
    "sfft",
    "modulate",
    "demodulate",
    "add_cp",
    "strip_cp",
]


@dataclass(frozen=True)
class OtfsGrid:
    """Frame geometry: ``m`` delay bins, ``n`` Doppler bins, CP length."""

    m: int
    n: int
    cp_len: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("grid dimensions must be positive")
        if not 0 <= self.cp_len <= self.m * self.n:
            raise ValueError("cp_len must lie in [0, m*n]")

    @property
    def size(self) -> int:
        return self.m * self.n


def _as_frame_matrix(grid: OtfsGrid, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (grid.size,):
        raise ValueError(f"expected frame vector of length {grid.size}, got shape {x.shape}")
    # delay-major vector <-> M x N matrix (delay rows, Doppler columns)
    return x.reshape(grid.m, grid.n, order="F")


def isfft(grid: OtfsGrid, x_dd: np.ndarray) -> np.ndarray:
    """Map an ``M x N`` delay-Doppler matrix to the time-frequency plane.

    Computes ``X_TF = F_M @ X_DD @ F_N^H`` with unitary DFT matrices.
    """
    x_dd = np.asarray(x_dd, dtype=np.complex128)
    if x_dd.shape != (grid.m, grid.n):
        raise ValueError(f"expected ({grid.m}, {grid.n}) matrix, got {x_dd.shape}")
    return np.fft.fft(np.fft.ifft(x_dd, axis=1), axis=0) * np.sqrt(grid.n / grid.m)


def sfft(grid: OtfsGrid, x_tf: np.ndarray) -> np.ndarray:
    """Inverse of :func:`isfft`: ``X_DD = F_M^H @ X_TF @ F_N``."""
    x_tf = np.asarray(x_tf, dtype=np.complex128)
    if x_tf.shape != (grid.m, grid.n):
        raise ValueError(f"expected ({grid.m}, {grid.n}) matrix, got {x_tf.shape}")
    return np.fft.fft(np.fft.ifft(x_tf, axis=0), axis=1) * np.sqrt(grid.m / grid.n)


def modulate(grid: OtfsGrid, x: np.ndarray) -> np.ndarray:
    """Delay-Doppler frame vector -> time-domain samples (no CP).

    Equivalent to ``(F_N^H kron I_M) @ x``; implemented as an IDFT across
    the Doppler axis.
    """
    x_t = np.fft.ifft(_as_frame_matrix(grid, x), axis=1) * np.sqrt(grid.n)
    return x_t.reshape(-1, order="F")


def demodulate(grid: OtfsGrid, y_t: np.ndarray) -> np.ndarray:
    """Time-domain samples (no CP) -> delay-Doppler frame vector.

    Equivalent to ``(F_N kron I_M) @ y_t``.
    """
    y_dd = np.fft.fft(_as_frame_matrix(grid, y_t), axis=1) / np.sqrt(grid.n)
    return y_dd.reshape(-1, order="F")


def add_cp(grid: OtfsGrid, x_t: np.ndarray) -> np.ndarray:
    """Prefix the frame with a cyclic copy of its final ``cp_len`` samples."""
    x_t = np.asarray(x_t, dtype=np.complex128)
    if x_t.shape != (grid.size,):
        raise ValueError(f"expected {grid.size} samples, got shape {x_t.shape}")
    if grid.cp_len == 0:
        return x_t.copy()
    return np.concatenate([x_t[-grid.cp_len:], x_t])


def strip_cp(grid: OtfsGrid, y_cp: np.ndarray) -> np.ndarray:
    """Drop the cyclic prefix, returning the ``M*N`` frame body."""
    y_cp = np.asarray(y_cp, dtype=np.complex128)
    if y_cp.shape != (grid.size + grid.cp_len,):
        raise ValueError(
            f"expected {grid.size + grid.cp_len} samples, got shape {y_cp.shape}"
        )
    return y_cp[grid.cp_len:].copy()
