# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: FSPAI column construction and log-MAP BCJR.

Semantics mirror ``_pure`` exactly; tests compare the two backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, log1p, sqrt
from libc.stdlib cimport free, malloc

from otfseq.errors import NumericalError

cnp.import_array()

BACKEND = "compiled"


cdef inline Py_ssize_t _lower_bound(const cnp.int64_t* idx, Py_ssize_t lo, Py_ssize_t hi,
                                    cnp.int64_t row) noexcept nogil:
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if idx[mid] < row:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline double complex _entry(const cnp.int64_t* indptr, const cnp.int64_t* indices,
                                  const double complex* data, cnp.int64_t row,
                                  cnp.int64_t col) noexcept nogil:
    cdef Py_ssize_t lo = indptr[col]
    cdef Py_ssize_t hi = indptr[col + 1]
    cdef Py_ssize_t pos = _lower_bound(indices, lo, hi, row)
    if pos < hi and indices[pos] == row:
        return data[pos]
    return 0.0


def fspai_factor(Py_ssize_t n,
                 cnp.int64_t[::1] indptr,
                 cnp.int64_t[::1] indices,
                 double complex[::1] data,
                 double[::1] diag,
                 Py_ssize_t zeta,
                 double eps_f):
    """See ``otfseq._kernels._pure.fspai_factor``; same contract."""
    cdef Py_ssize_t cap = zeta if zeta < n - 1 else (n - 1 if n > 1 else 0)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_indptr = np.zeros(n + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_indices = np.empty(n * (cap + 1), dtype=np.int64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out_data = np.empty(n * (cap + 1), dtype=np.complex128)

    cdef cnp.int64_t* op = &out_indptr[0]
    cdef cnp.int64_t* oi = <cnp.int64_t*> out_indices.data
    cdef double complex* od = <double complex*> out_data.data
    cdef const cnp.int64_t* ip = &indptr[0]
    cdef const cnp.int64_t* ix = &indices[0]
    cdef const double complex* dv = &data[0]
    cdef const double* dg = &diag[0]

    cdef Py_ssize_t k
    for k in range(n):
        if dg[k] <= 0.0:
            raise NumericalError(f"matrix not positive definite: a[{k},{k}] <= 0")

    # workspaces
    cdef double complex* acc = <double complex*> malloc(n * sizeof(double complex))
    cdef cnp.int64_t* stamp = <cnp.int64_t*> malloc(n * sizeof(cnp.int64_t))
    cdef char* in_ck = <char*> malloc(n * sizeof(char))
    cdef cnp.int64_t* cand = <cnp.int64_t*> malloc(n * sizeof(cnp.int64_t))
    cdef cnp.int64_t* ck = <cnp.int64_t*> malloc((cap + 1) * sizeof(cnp.int64_t))
    cdef double complex* lv = <double complex*> malloc((cap + 1) * sizeof(double complex))
    cdef double complex* chol = <double complex*> malloc(
        (cap * cap if cap > 0 else 1) * sizeof(double complex))
    cdef double complex* a_vec = <double complex*> malloc((cap + 1) * sizeof(double complex))
    cdef double complex* q = <double complex*> malloc((cap + 1) * sizeof(double complex))
    cdef double complex* y = <double complex*> malloc((cap + 1) * sizeof(double complex))
    if (acc == NULL or stamp == NULL or in_ck == NULL or cand == NULL or ck == NULL
            or lv == NULL or chol == NULL or a_vec == NULL or q == NULL or y == NULL):
        free(acc); free(stamp); free(in_ck); free(cand); free(ck)
        free(lv); free(chol); free(a_vec); free(q); free(y)
        raise MemoryError()

    cdef Py_ssize_t i, j, t, s, nck, ncand, pos, out_pos, bad_col
    cdef cnp.int64_t r, rbest, tag = 0, col_i
    cdef double eta, eta_best, mag, d2, dk, dot
    cdef double complex lvi, zsum, lkk
    cdef int failed = 0

    for i in range(n):
        stamp[i] = -1
        in_ck[i] = 0
    out_pos = 0
    bad_col = -1

    with nogil:
        for k in range(n):
            nck = 1
            ck[0] = k
            lv[0] = 1.0 / sqrt(dg[k])
            in_ck[k] = 1
            s = 0  # current |C-tilde|

            while s < zeta:
                tag += 1
                ncand = 0
                for i in range(nck):
                    col_i = ck[i]
                    lvi = lv[i]
                    for t in range(ip[col_i], ip[col_i + 1]):
                        r = ix[t]
                        if r > k and in_ck[r] == 0:
                            if stamp[r] != tag:
                                stamp[r] = tag
                                acc[r] = 0.0
                                cand[ncand] = r
                                ncand += 1
                            acc[r] = acc[r] + dv[t] * lvi
                rbest = -1
                eta_best = -1.0
                for i in range(ncand):
                    r = cand[i]
                    mag = acc[r].real * acc[r].real + acc[r].imag * acc[r].imag
                    if mag == 0.0:
                        continue
                    eta = mag / dg[r]
                    if eta > eta_best or (eta == eta_best and r < rbest):
                        eta_best = eta
                        rbest = r
                if rbest < 0 or eta_best < eps_f:
                    break

                # extend the Cholesky factor of A(C~, C~) with index rbest
                for j in range(s):
                    y[j] = _entry(ip, ix, dv, ck[1 + j], rbest)  # b_j = A(ctil_j, rbest)
                for i in range(s):
                    zsum = y[i]
                    for j in range(i):
                        zsum = zsum - chol[i * cap + j] * y[j]
                    y[i] = zsum / chol[i * cap + i]
                d2 = dg[rbest]
                for j in range(s):
                    d2 -= y[j].real * y[j].real + y[j].imag * y[j].imag
                if d2 <= 0.0:
                    failed = 1
                    bad_col = k
                    break
                for j in range(s):
                    chol[s * cap + j] = y[j].real - 1j * y[j].imag
                chol[s * cap + s] = sqrt(d2)

                ck[nck] = rbest
                in_ck[rbest] = 1
                nck += 1
                a_vec[s] = _entry(ip, ix, dv, rbest, k)
                s += 1

                # solve A(C~,C~) q = a_k(C~) via the running Cholesky factor:
                # forward solve L y = a_vec
                for i in range(s):
                    zsum = a_vec[i]
                    for j in range(i):
                        zsum = zsum - chol[i * cap + j] * y[j]
                    y[i] = zsum / chol[i * cap + i]
                # backward solve L^H q = y
                for i in range(s - 1, -1, -1):
                    zsum = y[i]
                    for j in range(i + 1, s):
                        zsum = zsum - (chol[j * cap + i].real - 1j * chol[j * cap + i].imag) * q[j]
                    q[i] = zsum / chol[i * cap + i]

                dot = 0.0
                for j in range(s):
                    dot += (a_vec[j].real * q[j].real + a_vec[j].imag * q[j].imag)
                dk = dg[k] - dot
                if dk <= 0.0:
                    failed = 1
                    bad_col = k
                    break
                lkk = 1.0 / sqrt(dk)
                lv[0] = lkk
                for j in range(s):
                    lv[1 + j] = -lkk * q[j]

            if failed:
                break

            # emit column k with off-diagonal rows sorted ascending
            od[out_pos] = lv[0]
            oi[out_pos] = k
            out_pos += 1
            for i in range(s):  # insertion sort by row index
                r = ck[1 + i]
                lvi = lv[1 + i]
                j = out_pos
                while j > op[k] + 1 and oi[j - 1] > r:
                    oi[j] = oi[j - 1]
                    od[j] = od[j - 1]
                    j -= 1
                oi[j] = r
                od[j] = lvi
                out_pos += 1
            op[k + 1] = out_pos

            for i in range(nck):
                in_ck[ck[i]] = 0

    free(acc); free(stamp); free(in_ck); free(cand); free(ck)
    free(lv); free(chol); free(a_vec); free(q); free(y)
    if failed:
        raise NumericalError(f"matrix not positive definite at column {bad_col}")

    return out_indptr, out_indices[:out_pos].copy(), out_data[:out_pos].copy()


cdef inline double _lse(double a, double b) noexcept nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a < b:
        a, b = b, a
    return a + log1p(exp(b - a))


def bcjr(double[::1] la,
         cnp.int64_t[:, ::1] next_state,
         signed char[:, :, ::1] out_bits,
         bint terminated=True):
    """See ``otfseq._kernels._pure.bcjr``; same contract."""
    cdef Py_ssize_t n_states = next_state.shape[0]
    cdef Py_ssize_t n_steps = la.shape[0] // 2
    if la.shape[0] != 2 * n_steps or n_steps == 0:
        raise ValueError("prior vector must hold two LLRs per trellis step")

    cdef cnp.ndarray[cnp.float64_t, ndim=1] app_coded = np.empty(2 * n_steps)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] app_info = np.empty(n_steps)
    cdef double* apc = <double*> app_coded.data
    cdef double* api = <double*> app_info.data

    cdef double* alpha = <double*> malloc((n_steps + 1) * n_states * sizeof(double))
    cdef double* beta = <double*> malloc((n_steps + 1) * n_states * sizeof(double))
    cdef double* g = <double*> malloc(n_states * 2 * sizeof(double))
    cdef double* sgn0 = <double*> malloc(n_states * 2 * sizeof(double))
    cdef double* sgn1 = <double*> malloc(n_states * 2 * sizeof(double))
    if alpha == NULL or beta == NULL or g == NULL or sgn0 == NULL or sgn1 == NULL:
        free(alpha); free(beta); free(g); free(sgn0); free(sgn1)
        raise MemoryError()

    cdef Py_ssize_t t, sidx, u, f
    cdef double mx, v, met, u0, u1, c0z, c0o, c1z, c1o
    cdef const cnp.int64_t* nxt = &next_state[0, 0]

    with nogil:
        for sidx in range(n_states):
            for u in range(2):
                sgn0[2 * sidx + u] = 1.0 - 2.0 * out_bits[sidx, u, 0]
                sgn1[2 * sidx + u] = 1.0 - 2.0 * out_bits[sidx, u, 1]

        for sidx in range(n_states):
            alpha[sidx] = -INFINITY
            beta[n_steps * n_states + sidx] = -INFINITY if terminated else 0.0
        alpha[0] = 0.0
        beta[n_steps * n_states] = 0.0

        for t in range(n_steps):
            for f in range(2 * n_states):
                g[f] = 0.5 * (sgn0[f] * la[2 * t] + sgn1[f] * la[2 * t + 1])
            for sidx in range(n_states):
                alpha[(t + 1) * n_states + sidx] = -INFINITY
            for sidx in range(n_states):
                if alpha[t * n_states + sidx] == -INFINITY:
                    continue
                for u in range(2):
                    f = 2 * sidx + u
                    v = alpha[t * n_states + sidx] + g[f]
                    alpha[(t + 1) * n_states + nxt[f]] = _lse(
                        alpha[(t + 1) * n_states + nxt[f]], v)
            mx = -INFINITY
            for sidx in range(n_states):
                if alpha[(t + 1) * n_states + sidx] > mx:
                    mx = alpha[(t + 1) * n_states + sidx]
            for sidx in range(n_states):
                alpha[(t + 1) * n_states + sidx] -= mx

        for t in range(n_steps - 1, -1, -1):
            for f in range(2 * n_states):
                g[f] = 0.5 * (sgn0[f] * la[2 * t] + sgn1[f] * la[2 * t + 1])
            mx = -INFINITY
            for sidx in range(n_states):
                u0 = beta[(t + 1) * n_states + nxt[2 * sidx]] + g[2 * sidx]
                u1 = beta[(t + 1) * n_states + nxt[2 * sidx + 1]] + g[2 * sidx + 1]
                v = _lse(u0, u1)
                beta[t * n_states + sidx] = v
                if v > mx:
                    mx = v
            for sidx in range(n_states):
                beta[t * n_states + sidx] -= mx

        for t in range(n_steps):
            for f in range(2 * n_states):
                g[f] = 0.5 * (sgn0[f] * la[2 * t] + sgn1[f] * la[2 * t + 1])
            u0 = -INFINITY; u1 = -INFINITY
            c0z = -INFINITY; c0o = -INFINITY
            c1z = -INFINITY; c1o = -INFINITY
            for sidx in range(n_states):
                for u in range(2):
                    f = 2 * sidx + u
                    met = alpha[t * n_states + sidx] + g[f] + beta[(t + 1) * n_states + nxt[f]]
                    if u == 0:
                        u0 = _lse(u0, met)
                    else:
                        u1 = _lse(u1, met)
                    if out_bits[sidx, u, 0] == 0:
                        c0z = _lse(c0z, met)
                    else:
                        c0o = _lse(c0o, met)
                    if out_bits[sidx, u, 1] == 0:
                        c1z = _lse(c1z, met)
                    else:
                        c1o = _lse(c1o, met)
            api[t] = u0 - u1
            apc[2 * t] = c0z - c0o
            apc[2 * t + 1] = c1z - c1o

    free(alpha); free(beta); free(g); free(sgn0); free(sgn1)
    return app_coded, app_info
