"""Factorized sparse approximate inverse for Hermitian positive definite matrices.

fspai() builds a sparse lower-triangular L with L L^H close to A^{-1}, one
column at a time: each column starts from its diagonal entry, greedily adds
the candidate row that most reduces the Kaporin condition number, and then
recomputes the column exactly on its current pattern.  Columns are mutually
independent, so the construction order cannot change the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import NumericalError
from .sparse import SparseHermitianMatrix

__all__ = ["CholeskyFactor", "fspai", "kaporin_number", "apply_inverse"]

_DENSE_DET_LIMIT = 4096


@dataclass
class CholeskyFactor:
    """Sparse lower-triangular factor in CSC form.

    Rows within each column are sorted ascending, so the (real, positive)
    diagonal entry always comes first.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def diag(self) -> np.ndarray:
        return self.data[self.indptr[:-1]].real

    def degrees(self) -> np.ndarray:
        """Off-diagonal nonzero count per column."""
        return np.diff(self.indptr) - 1

    def tocsc(self) -> sp.csc_matrix:
        return sp.csc_matrix(
            (self.data, self.indices, self.indptr), shape=(self.n, self.n)
        )

    def toarray(self) -> np.ndarray:
        return self.tocsc().toarray()


def fspai(a: SparseHermitianMatrix, zeta: int, eps_f: float) -> CholeskyFactor:
    """Approximate inverse factor of an HPD matrix.

    zeta caps the off-diagonal entries per column; a column also stops when
    the best candidate's Kaporin improvement drops below eps_f or no
    candidate couples to it.  Raises NumericalError when the matrix turns
    out not to be positive definite.
    """
    if zeta < 0:
        raise ValueError("zeta must be nonnegative")
    if eps_f < 0.0:
        raise ValueError("eps_f must be nonnegative")
    if np.any(a.diag <= 0.0):
        raise NumericalError("matrix has a nonpositive diagonal entry")
    indptr = np.ascontiguousarray(a.indptr, dtype=np.int64)
    indices = np.ascontiguousarray(a.indices, dtype=np.int64)
    data = np.ascontiguousarray(a.data, dtype=np.complex128)
    diag = np.ascontiguousarray(a.diag, dtype=np.float64)
    out_indptr, out_indices, out_data = _kernels.fspai_factor(
        a.n, indptr, indices, data, diag, int(zeta), float(eps_f)
    )
    return CholeskyFactor(n=a.n, indptr=out_indptr, indices=out_indices, data=out_data)


def kaporin_number(a: SparseHermitianMatrix, factor: CholeskyFactor) -> float:
    """Kaporin condition number tr(L^H A L) / (n det(L^H A L)^{1/n}).

    The determinant goes through log space: log det(L^H A L) equals
    log det A plus twice the summed log diagonal of L.  Always at least 1
    for HPD inputs, with equality iff L^H A L is the identity.
    """
    n = a.n
    if n > _DENSE_DET_LIMIT:
        raise ValueError(f"dense determinant capped at n={_DENSE_DET_LIMIT}")
    lmat = factor.tocsc()
    al = a.csc @ lmat
    trace = float(np.real(lmat.conj().multiply(al).sum()))
    sign, logdet_a = np.linalg.slogdet(a.toarray())
    if sign.real <= 0.0 or abs(sign.imag) > 1e-12:
        raise NumericalError("matrix determinant is not positive")
    ldiag = factor.diag()
    if np.any(ldiag <= 0.0):
        raise NumericalError("factor diagonal is not positive")
    logdet = logdet_a + 2.0 * float(np.log(ldiag).sum())
    return (trace / n) * np.exp(-logdet / n)


def apply_inverse(factor: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    """Approximate A^{-1} b as L (L^H b): two sparse products, no solves."""
    lmat = factor.tocsc()
    return lmat @ (lmat.getH() @ np.asarray(b, dtype=np.complex128))
