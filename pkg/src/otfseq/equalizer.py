"""Doubly-iterative soft MMSE equalization with sparsified inner linear algebra.

The outer loop alternates between a soft-interference-cancelling MMSE
estimator and a SISO decoder (or, uncoded, the estimator's own extrinsic
output).  Iteration 1 solves two sparse systems by restarted GMRES and
shares one xi value across symbols; later iterations sparsify the
covariance graph, build an approximate inverse factor, and read per-symbol
xi off the factor columns.  Dense oracle estimators mirror both paths for
verification at small sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .coding import CodeConfig, deinterleave, interleave, siso_decode
from .errors import NumericalError
from .fspai import CholeskyFactor, apply_inverse, fspai
from .gmres import GmresReport, gmres
from .sparse import SparseHermitianMatrix, sparsify

__all__ = [
    "MODES",
    "SoftSymbolState",
    "EqualizerConfig",
    "EstimateResult",
    "FrameResult",
    "build_covariance",
    "estimate_initial",
    "estimate_initial_dense",
    "estimate_subsequent",
    "estimate_dense",
    "extrinsic_llrs",
    "update_priors",
    "equalize_frame",
]

MODES = ("turbo", "uncoded", "lmmse-oracle", "immse-oracle")

_SQRT8 = np.sqrt(8.0)
_DENSE_LIMIT = 4096


@dataclass
class SoftSymbolState:
    """Per-symbol prior means and variances fed into the estimator."""

    m: np.ndarray
    v: np.ndarray

    @classmethod
    def uninformative(cls, n: int) -> "SoftSymbolState":
        return cls(m=np.zeros(n, dtype=np.complex128), v=np.ones(n))


@dataclass(frozen=True)
class EqualizerConfig:
    n_outer: int = 5
    j_max: int = 8
    max_cycles: int = 8
    eps_g: float = 1e-3
    eps_f: float = 1e-3
    eps_a: float = 1e-3
    eps_d: float = 2.0
    zeta: int = 8
    llr_clip: float = 30.0
    sigma_floor: float = 1e-12
    var_floor: float = 1e-8

    def __post_init__(self):
        if self.n_outer < 1:
            raise ValueError("n_outer must be at least 1")
        if min(self.eps_g, self.sigma_floor, self.var_floor) <= 0:
            raise ValueError("tolerances must be positive")
        if self.eps_f < 0 or self.eps_a < 0:
            raise ValueError("eps_f and eps_a must be nonnegative")
        if self.zeta < 0:
            raise ValueError("zeta must be nonnegative")
        if self.j_max < 1 or self.max_cycles < 1:
            raise ValueError("j_max and max_cycles must be at least 1")
        if self.llr_clip <= 0:
            raise ValueError("llr_clip must be positive")


@dataclass
class EstimateResult:
    x_hat: np.ndarray
    xi: np.ndarray
    reports: tuple[GmresReport, ...] = ()
    factor: CholeskyFactor | None = None


@dataclass
class FrameResult:
    """decisions[i] holds the hard bits after outer iteration i+1."""

    decisions: np.ndarray
    factors: list[CholeskyFactor] = field(default_factory=list)
    reports: list[GmresReport] = field(default_factory=list)


def _as_csc(h_dd) -> sp.csc_matrix:
    if isinstance(h_dd, SparseHermitianMatrix):
        return h_dd.csc
    return sp.csc_matrix(h_dd, dtype=np.complex128)


def build_covariance(h_dd, v: np.ndarray, n0: float) -> SparseHermitianMatrix:
    """A = H diag(v) H^H + n0 I, symmetrized so conjugate pairs are exact."""
    if n0 <= 0.0:
        raise ValueError("n0 must be positive")
    h = _as_csc(h_dd)
    v = np.asarray(v, dtype=np.float64)
    prod = (h.multiply(v[np.newaxis, :]) @ h.getH()).tocsc()
    prod = (prod + prod.getH()) * 0.5
    a = (prod + sp.identity(h.shape[0], dtype=np.complex128, format="csc") * n0).tocsc()
    a.eliminate_zeros()
    a.sort_indices()
    return SparseHermitianMatrix(a, validate=False)


def _require_converged(report: GmresReport, label: str) -> None:
    if not report.converged:
        raise NumericalError(
            f"GMRES did not converge for {label}: "
            f"{report.cycles_used} cycles, residual "
            f"{report.residual_trace[-1] if len(report.residual_trace) else 1.0:.3e}"
        )


def estimate_initial(h_dd, y, n0: float, cfg: EqualizerConfig) -> EstimateResult:
    """First-iteration estimate under uninformative priors (m=0, v=1).

    Solves A f1 = y and A f2 = h_0 with restarted GMRES and shares
    xi = Re(h_0^H f2) across all symbols; the imaginary part must vanish to
    solver accuracy.
    """
    h = _as_csc(h_dd)
    mn = h.shape[0]
    a = build_covariance(h, np.ones(mn), n0)
    rep1 = gmres(
        a, y, j_max=cfg.j_max, eps_g=cfg.eps_g, max_cycles=cfg.max_cycles
    )
    _require_converged(rep1, "A f1 = y")
    h0 = h[:, [0]].toarray().ravel()
    rep2 = gmres(
        a, h0, j_max=cfg.j_max, eps_g=cfg.eps_g, max_cycles=cfg.max_cycles
    )
    _require_converged(rep2, "A f2 = h_0")
    xi_c = np.vdot(h0, rep2.solution)
    if abs(xi_c.imag) > max(1e-8, 10.0 * cfg.eps_g * abs(xi_c.real)):
        raise NumericalError(f"shared xi is not numerically real: {xi_c}")
    xi = float(xi_c.real)
    x_hat = h.getH() @ rep1.solution
    return EstimateResult(x_hat=x_hat, xi=np.full(mn, xi), reports=(rep1, rep2))


def estimate_initial_dense(h_dd, y, n0: float) -> EstimateResult:
    """Dense oracle for the first iteration: explicit inverse, shared xi."""
    h = _as_csc(h_dd)
    mn = h.shape[0]
    if mn > _DENSE_LIMIT:
        raise ValueError(f"dense oracle capped at n={_DENSE_LIMIT}")
    hd = h.toarray()
    a_inv = np.linalg.inv(hd @ hd.conj().T + n0 * np.eye(mn))
    h0 = hd[:, 0]
    xi = float(np.vdot(h0, a_inv @ h0).real)
    x_hat = hd.conj().T @ (a_inv @ y)
    return EstimateResult(x_hat=x_hat, xi=np.full(mn, xi))


def estimate_subsequent(
    h_dd, y, n0: float, state: SoftSymbolState, cfg: EqualizerConfig
) -> EstimateResult:
    """Later-iteration estimate through the sparsified approximate inverse.

    The covariance graph is thinned by the edge and node thresholds, the
    approximate factor L of A^{-1} is built, and per-symbol
    xi_n = ||L^H h_n||^2 replaces the shared value.
    """
    h = _as_csc(h_dd)
    v = np.maximum(np.asarray(state.v, dtype=np.float64), cfg.var_floor)
    a = build_covariance(h, v, n0)
    thinned = sparsify(a, cfg.eps_a, cfg.eps_d)
    factor = fspai(thinned, cfg.zeta, cfg.eps_f)
    g = apply_inverse(factor, y - h @ state.m)
    t = (factor.tocsc().getH() @ h).tocsc()
    xi = np.asarray(t.multiply(t.conj()).sum(axis=0)).ravel().real
    x_hat = (h.getH() @ g + state.m * xi) / (1.0 + (1.0 - v) * xi)
    return EstimateResult(x_hat=x_hat, xi=xi, factor=factor)


def estimate_dense(h_dd, y, n0: float, state: SoftSymbolState) -> EstimateResult:
    """Dense oracle with exact per-symbol xi at any iteration."""
    h = _as_csc(h_dd)
    mn = h.shape[0]
    if mn > _DENSE_LIMIT:
        raise ValueError(f"dense oracle capped at n={_DENSE_LIMIT}")
    hd = h.toarray()
    a = (hd * state.v) @ hd.conj().T + n0 * np.eye(mn)
    a_inv = np.linalg.inv(a)
    xi = np.einsum("ij,jk,ki->i", hd.conj().T, a_inv, hd).real
    g = a_inv @ (y - hd @ state.m)
    x_hat = (hd.conj().T @ g + state.m * xi) / (1.0 + (1.0 - state.v) * xi)
    return EstimateResult(x_hat=x_hat, xi=xi)


def extrinsic_llrs(
    x_hat: np.ndarray,
    xi: np.ndarray,
    v: np.ndarray,
    llr_clip: float = 30.0,
    sigma_floor: float = 1e-12,
) -> np.ndarray:
    """Per-bit extrinsic LLRs of the estimator, interleaved (re, im) pairs.

    The error variance term 1 - v xi is strictly positive in exact
    arithmetic; sigma_floor only absorbs floating-point underflow.
    """
    denom = np.maximum(1.0 - v * xi, sigma_floor)
    scale = _SQRT8 * (1.0 + (1.0 - v) * xi) / denom
    le = np.empty(2 * x_hat.size)
    le[0::2] = scale * x_hat.real
    le[1::2] = scale * x_hat.imag
    return np.clip(le, -llr_clip, llr_clip)


def update_priors(la: np.ndarray) -> SoftSymbolState:
    """Convert coded-bit prior LLRs into symbol means and variances.

    m_n = (tanh(L1/2) + i tanh(L2/2)) / sqrt(2) and v_n = 1 - |m_n|^2,
    which stays in (0, 1] for clipped inputs.
    """
    la = np.asarray(la, dtype=np.float64)
    t1 = np.tanh(0.5 * la[0::2])
    t2 = np.tanh(0.5 * la[1::2])
    m = (t1 + 1j * t2) / np.sqrt(2.0)
    v = 1.0 - (t1 * t1 + t2 * t2) * 0.5
    return SoftSymbolState(m=m, v=v)


def equalize_frame(
    y: np.ndarray,
    h_dd,
    n0: float,
    cfg: EqualizerConfig,
    code_cfg: CodeConfig | None = None,
    interleaver_seed: int = 0,
    mode: str = "turbo",
) -> FrameResult:
    """Run the full outer loop on one received frame.

    Coded modes decode between estimator passes and report information-bit
    decisions; uncoded mode feeds the estimator's own extrinsic output back
    as the next prior and reports raw bit decisions.  The oracle modes
    replace the sparse estimators with dense exact ones: lmmse-oracle is a
    single shared-xi iteration, immse-oracle iterates with exact per-symbol
    xi throughout.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    coded = mode != "uncoded"
    if coded and code_cfg is None:
        code_cfg = CodeConfig()
    h = _as_csc(h_dd)
    mn = h.shape[0]
    state = SoftSymbolState.uninformative(mn)
    n_outer = 1 if mode == "lmmse-oracle" else cfg.n_outer
    decisions = []
    factors: list[CholeskyFactor] = []
    reports: list[GmresReport] = []
    for it in range(n_outer):
        v_eff = np.maximum(state.v, cfg.var_floor) if it else state.v
        if it == 0:
            if mode == "turbo" or mode == "uncoded":
                est = estimate_initial(h, y, n0, cfg)
            elif mode == "lmmse-oracle":
                est = estimate_initial_dense(h, y, n0)
            else:
                est = estimate_dense(h, y, n0, state)
        else:
            if mode == "immse-oracle":
                est = estimate_dense(h, y, n0, SoftSymbolState(state.m, v_eff))
            else:
                est = estimate_subsequent(h, y, n0, state, cfg)
        reports.extend(est.reports)
        if est.factor is not None:
            factors.append(est.factor)
        le = extrinsic_llrs(est.x_hat, est.xi, v_eff, cfg.llr_clip, cfg.sigma_floor)
        if coded:
            le_dec, u_hat = siso_decode(
                code_cfg, deinterleave(interleaver_seed, le), cfg.llr_clip
            )
            decisions.append(u_hat)
            state = update_priors(interleave(interleaver_seed, le_dec))
        else:
            decisions.append((le < 0).astype(np.int8))
            state = update_priors(le)
    return FrameResult(
        decisions=np.asarray(decisions), factors=factors, reports=reports
    )
