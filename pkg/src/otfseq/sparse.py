"""Sparse Hermitian matrices, degree statistics, and graph sparsification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SparseHermitianMatrix",
    "DegreeCdf",
    "degree_cdf",
    "jacobi_sparsify",
    "node_sparsify",
    "sparsify",
    "save_triplets",
    "load_triplets",
]

_HERMITIAN_RTOL = 1e-10


class SparseHermitianMatrix:
    """Hermitian matrix in CSC form with a structurally symmetric pattern.

    The stored pattern satisfies (i, j) present iff (j, i) present, values
    satisfy a(i, j) = conj(a(j, i)), and every diagonal entry is present,
    real, and strictly positive.  Instances are immutable by convention:
    the sparsification passes below return new matrices.
    """

    def __init__(self, mat, validate: bool = True):
        csc = sp.csc_matrix(mat, dtype=np.complex128)
        csc.sum_duplicates()
        csc.sort_indices()
        if csc.shape[0] != csc.shape[1]:
            raise ValueError(f"matrix must be square, got {csc.shape}")
        self._csc = csc
        self.n = csc.shape[0]
        diag = csc.diagonal()
        self.diag = np.ascontiguousarray(diag.real)
        if validate:
            self._validate(diag)

    def _validate(self, diag: np.ndarray) -> None:
        csc = self._csc
        pattern = csc.copy()
        pattern.data = np.ones_like(pattern.data, dtype=np.int8)
        if (pattern != pattern.T).nnz:
            raise ValueError("sparsity pattern is not symmetric")
        defect = (csc - csc.getH()).tocsc()
        scale = max(1.0, float(abs(csc.data).max()) if csc.nnz else 0.0)
        if defect.nnz and abs(defect.data).max() > _HERMITIAN_RTOL * scale:
            raise ValueError("matrix values are not Hermitian")
        if np.any(diag.real <= 0.0) or np.any(
            np.abs(diag.imag) > _HERMITIAN_RTOL * scale
        ):
            raise ValueError("diagonal must be real and strictly positive")

    @property
    def csc(self) -> sp.csc_matrix:
        return self._csc

    @property
    def indptr(self) -> np.ndarray:
        return self._csc.indptr

    @property
    def indices(self) -> np.ndarray:
        return self._csc.indices

    @property
    def data(self) -> np.ndarray:
        return self._csc.data

    @property
    def nnz(self) -> int:
        return self._csc.nnz

    @property
    def shape(self) -> tuple[int, int]:
        return self._csc.shape

    def toarray(self) -> np.ndarray:
        return self._csc.toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self._csc @ x

    def degrees(self) -> np.ndarray:
        """Off-diagonal nonzero count per column (node degree in the graph)."""
        total = np.diff(self._csc.indptr)
        cols = np.repeat(np.arange(self.n), total)
        has_diag = np.bincount(cols[self._csc.indices == cols], minlength=self.n)
        return total - has_diag

    def __repr__(self) -> str:
        return f"SparseHermitianMatrix(n={self.n}, nnz={self.nnz})"


@dataclass(frozen=True)
class DegreeCdf:
    """Empirical distribution of node degrees.

    counts[d] is the number of nodes with degree d for d = 0..n-1 and
    cdf[d] = P(degree <= d); cdf is nondecreasing with cdf[n-1] = 1.
    """

    counts: np.ndarray
    cdf: np.ndarray

    def at(self, d: int) -> float:
        return float(self.cdf[d])


def degree_cdf(source) -> DegreeCdf:
    """Degree CDF of a matrix, a Cholesky factor, or a raw degree array."""
    degrees = source.degrees() if hasattr(source, "degrees") else np.asarray(source)
    n = degrees.size
    counts = np.bincount(degrees, minlength=n)
    return DegreeCdf(counts=counts, cdf=np.cumsum(counts) / n)


def jacobi_sparsify(a: SparseHermitianMatrix, eps_a: float) -> SparseHermitianMatrix:
    """Drop off-diagonal entries that are small after Jacobi scaling.

    Entries with |a(i,j)| / sqrt(|a(i,i)| |a(j,j)|) <= eps_a are removed;
    the diagonal is always kept.  Drop decisions are exactly symmetric, so
    the result keeps a symmetric pattern.
    """
    if np.any(a.diag <= 0.0):
        raise ValueError("Jacobi scaling needs a strictly positive diagonal")
    coo = a.csc.tocoo()
    scale = 1.0 / np.sqrt(np.abs(a.diag))
    mags = np.abs(coo.data) * (scale[coo.row] * scale[coo.col])
    keep = (coo.row == coo.col) | (mags > eps_a)
    pruned = sp.csc_matrix(
        (coo.data[keep], (coo.row[keep], coo.col[keep])), shape=a.shape
    )
    return SparseHermitianMatrix(pruned, validate=False)


def node_sparsify(a: SparseHermitianMatrix, eps_d: float) -> SparseHermitianMatrix:
    """Disconnect every node whose degree is at most eps_d.

    Degrees are evaluated once on the input; removals do not cascade.  A
    disconnected node keeps only its diagonal entry.
    """
    weak = a.degrees() <= eps_d
    coo = a.csc.tocoo()
    keep = (coo.row == coo.col) | (~weak[coo.row] & ~weak[coo.col])
    pruned = sp.csc_matrix(
        (coo.data[keep], (coo.row[keep], coo.col[keep])), shape=a.shape
    )
    return SparseHermitianMatrix(pruned, validate=False)


def sparsify(
    a: SparseHermitianMatrix, eps_a: float, eps_d: float
) -> SparseHermitianMatrix:
    """Edge threshold then node threshold, in that order."""
    return node_sparsify(jacobi_sparsify(a, eps_a), eps_d)


def save_triplets(path, mat) -> None:
    """Write a matrix as text triplets: one "row col re im" line per entry."""
    coo = sp.coo_matrix(mat.csc if isinstance(mat, SparseHermitianMatrix) else mat)
    out = np.column_stack([coo.row, coo.col, coo.data.real, coo.data.imag])
    np.savetxt(path, out, fmt="%d %d %.17g %.17g")


def load_triplets(path, n: int | None = None) -> sp.csc_matrix:
    """Read a triplet text file; n defaults to the largest index plus one."""
    raw = np.loadtxt(path, ndmin=2)
    if raw.size == 0:
        raise ValueError("triplet file holds no entries")
    rows = raw[:, 0].astype(np.int64)
    cols = raw[:, 1].astype(np.int64)
    vals = raw[:, 2] + 1j * raw[:, 3]
    if n is None:
        n = int(max(rows.max(), cols.max())) + 1
    return sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
