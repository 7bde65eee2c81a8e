"""Restarted GMRES with Givens-rotation least squares, plus convergence bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NumericalError
from .sparse import SparseHermitianMatrix

__all__ = ["GmresReport", "gmres", "chebyshev_bound", "eigen_extremes"]

_BREAKDOWN_RTOL = 1e-14
_DENSE_EIG_LIMIT = 4096


@dataclass
class GmresReport:
    """Outcome of one gmres() call.

    residual_trace holds the relative residual after every inner iteration,
    normalized by the residual of the very first cycle so restarts do not
    reset the trace.
    """

    solution: np.ndarray
    residual_trace: np.ndarray
    cycles_used: int
    converged: bool


def _as_matvec(a):
    if isinstance(a, SparseHermitianMatrix):
        mat = a.csc
        return lambda x: mat @ x
    if sp.issparse(a) or isinstance(a, np.ndarray):
        return lambda x: a @ x
    if callable(a):
        return a
    raise TypeError(f"cannot build a matvec from {type(a).__name__}")


def gmres(a, b, f0=None, *, j_max, eps_g=1e-3, max_cycles=8) -> GmresReport:
    """Solve a x = b by restarted GMRES (restart length j_max).

    The Arnoldi basis is built with modified Gram-Schmidt and the Hessenberg
    least-squares problem is reduced incrementally by complex Givens
    rotations, so the residual norm is read off the transformed right-hand
    side without forming the iterate.  Back substitution runs only at a stop
    or a restart.  Convergence means the residual dropped below eps_g times
    the initial residual norm; hitting max_cycles first returns the best
    iterate with converged=False.
    """
    if j_max < 1:
        raise ValueError("j_max must be at least 1")
    if max_cycles < 1:
        raise ValueError("max_cycles must be at least 1")
    if eps_g <= 0.0:
        raise ValueError("eps_g must be positive")
    matvec = _as_matvec(a)
    b = np.asarray(b, dtype=np.complex128)
    n = b.size
    f = np.zeros(n, dtype=np.complex128) if f0 is None else np.asarray(
        f0, dtype=np.complex128
    ).copy()
    if np.linalg.norm(b) == 0.0:
        return GmresReport(np.zeros(n, np.complex128), np.empty(0), 0, True)
    r = b.copy() if f0 is None else b - matvec(f)
    rho_global = np.linalg.norm(r)
    tol = eps_g * rho_global
    trace: list[float] = []
    converged = rho_global == 0.0
    cycles = 0
    while cycles < max_cycles and not converged:
        rho = np.linalg.norm(r)
        if rho <= tol:
            converged = True
            break
        basis = [r / rho]
        ucols: list[np.ndarray] = []  # rotated Hessenberg columns (triangular)
        rot_c: list[complex] = []
        rot_s: list[float] = []
        w = np.zeros(j_max + 1, dtype=np.complex128)
        w[0] = rho
        jused = 0
        for j in range(j_max):
            p = matvec(basis[j])
            p_scale = np.linalg.norm(p)
            t = np.zeros(j + 1, dtype=np.complex128)
            for i in range(j + 1):
                t[i] = np.vdot(basis[i], p)
                p = p - t[i] * basis[i]
            tnext = np.linalg.norm(p)
            if tnext <= _BREAKDOWN_RTOL * p_scale:
                tnext = 0.0  # happy breakdown: the subspace is invariant
            else:
                basis.append(p / tnext)
            for i in range(j):
                ti = t[i]
                t[i] = np.conj(rot_c[i]) * ti + rot_s[i] * t[i + 1]
                t[i + 1] = -rot_s[i] * ti + rot_c[i] * t[i + 1]
            rr = math.hypot(abs(t[j]), tnext)
            if rr == 0.0:
                raise NumericalError(
                    f"GMRES hit a zero Hessenberg column at iteration {j}"
                )
            c = t[j] / rr
            s = tnext / rr
            rot_c.append(c)
            rot_s.append(s)
            t[j] = np.conj(c) * t[j] + s * tnext
            wj = w[j]
            w[j] = np.conj(c) * wj
            w[j + 1] = -s * wj
            ucols.append(t)
            jused = j + 1
            res = abs(w[j + 1])
            trace.append(res / rho_global)
            if res <= tol:
                converged = True
                break
        y = np.zeros(jused, dtype=np.complex128)
        for i in range(jused - 1, -1, -1):
            acc = w[i]
            for k in range(i + 1, jused):
                acc = acc - ucols[k][i] * y[k]
            y[i] = acc / ucols[i][i]
        f = f + np.asarray(basis[:jused]).T @ y
        cycles += 1
        r = b - matvec(f)
    return GmresReport(
        solution=f,
        residual_trace=np.asarray(trace),
        cycles_used=cycles,
        converged=converged,
    )


def chebyshev_bound(lambda_min: float, lambda_max: float, j: int) -> float:
    """Residual bound 1/T_j((lmax + lmin)/(lmax - lmin)) for an HPD operator.

    Evaluated through u = (rho + sqrt(rho^2 - 1))^{-j} as 2u/(1 + u^2) so
    large j cannot overflow.  The bound never exceeds rho^{-j}.
    """
    if not 0.0 < lambda_min < lambda_max:
        raise ValueError("need 0 < lambda_min < lambda_max")
    if j < 0:
        raise ValueError("polynomial degree must be nonnegative")
    rho = (lambda_max + lambda_min) / (lambda_max - lambda_min)
    u = (rho + math.sqrt(rho * rho - 1.0)) ** (-j)
    return 2.0 * u / (1.0 + u * u)


def eigen_extremes(a) -> tuple[float, float]:
    """Extreme eigenvalues by dense Hermitian decomposition (diagnostic).

    Refuses n > 4096: this is a desk-scale oracle, not a production path.
    """
    shape = a.shape
    if shape[0] != shape[1]:
        raise ValueError("matrix must be square")
    if shape[0] > _DENSE_EIG_LIMIT:
        raise ValueError(f"dense eigen decomposition capped at n={_DENSE_EIG_LIMIT}")
    if isinstance(a, SparseHermitianMatrix) or sp.issparse(a):
        dense = a.toarray()
    else:
        dense = np.asarray(a)
    vals = np.linalg.eigvalsh(dense)
    return float(vals[0]), float(vals[-1])
