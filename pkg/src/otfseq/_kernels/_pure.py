"""Pure NumPy implementations of the hot kernels.

These are the reference semantics for the compiled extension in ``_core``;
the two backends are interchangeable and tested against each other.
"""

import numpy as np

from ..errors import NumericalError

BACKEND = "pure"


def fspai_factor(n, indptr, indices, data, diag, zeta, eps_f):
    """Greedy factorized sparse approximate inverse of a Hermitian A.

    Returns CSC arrays (indptr, indices, data) of a lower-triangular L with
    real positive diagonal such that L @ L^H approximates inv(A).  Each
    column starts from the singleton pattern {k} with l_kk = a_kk**-0.5 and
    grows one row index per round: candidates are the structural neighbors
    r > k of the current pattern with nonzero coupling, scored by
    |a_r(C)^H l_k(C)|^2 / a_rr, largest score first (smallest index on
    ties).  A column stops when it holds ``zeta`` off-diagonal entries, the
    best score drops below ``eps_f``, or no candidate remains.
    """
    indptr = np.asarray(indptr, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    data = np.asarray(data, dtype=np.complex128)
    diag = np.asarray(diag, dtype=np.float64)
    if np.any(diag <= 0):
        bad = int(np.argmin(diag))
        raise NumericalError(f"matrix not positive definite: a[{bad},{bad}] <= 0")

    out_indptr = np.zeros(n + 1, dtype=np.int64)
    out_indices = []
    out_data = []

    for k in range(n):
        ck = [k]
        in_ck = {k}
        lvals = np.array([1.0 / np.sqrt(diag[k])], dtype=np.complex128)
        ctil = []
        a_vec = []  # entries of column k at the rows in ctil (insertion order)

        while len(ctil) < zeta:
            # coupling of every structural neighbor r > k with the current column
            acc = {}
            for i, lv in zip(ck, lvals):
                lo, hi = indptr[i], indptr[i + 1]
                for r, a_ri in zip(indices[lo:hi], data[lo:hi]):
                    if r > k and r not in in_ck:
                        acc[r] = acc.get(r, 0.0) + a_ri * lv
            cand = [
                (r, (d.real * d.real + d.imag * d.imag) / diag[r])
                for r, d in acc.items()
                if d != 0.0
            ]
            if not cand:
                break
            best_r, best_eta = min(cand, key=lambda t: (-t[1], t[0]))
            if best_eta < eps_f:
                break

            ctil.append(best_r)
            ck.append(best_r)
            in_ck.add(best_r)
            a_vec.append(_entry(indptr, indices, data, best_r, k))

            sub = _gather(indptr, indices, data, ctil)
            rhs = np.asarray(a_vec, dtype=np.complex128)
            try:
                q = np.linalg.solve(sub, rhs)
            except np.linalg.LinAlgError as exc:
                raise NumericalError(f"column {k}: singular pattern submatrix") from exc
            d = diag[k] - float(np.real(np.vdot(rhs, q)))
            if d <= 0.0:
                raise NumericalError(f"matrix not positive definite at column {k}")
            lkk = 1.0 / np.sqrt(d)
            lvals = np.concatenate([[lkk], -lkk * q])

        order = np.argsort(ctil, kind="stable")
        out_indices.append(np.concatenate([[k], np.asarray(ctil, dtype=np.int64)[order]]))
        out_data.append(np.concatenate([[lvals[0]], lvals[1:][order]]))
        out_indptr[k + 1] = out_indptr[k] + 1 + len(ctil)

    return (
        out_indptr,
        np.concatenate(out_indices).astype(np.int64),
        np.concatenate(out_data).astype(np.complex128),
    )


def _entry(indptr, indices, data, row, col):
    lo, hi = indptr[col], indptr[col + 1]
    pos = np.searchsorted(indices[lo:hi], row)
    if pos < hi - lo and indices[lo + pos] == row:
        return data[lo + pos]
    return 0.0


def _gather(indptr, indices, data, sel):
    sub = np.zeros((len(sel), len(sel)), dtype=np.complex128)
    for j, c in enumerate(sel):
        for i, r in enumerate(sel):
            sub[i, j] = _entry(indptr, indices, data, r, c)
    return sub


def bcjr(la, next_state, out_bits, terminated=True):
    """Exact log-MAP forward/backward pass over a trellis starting at state 0.

    ``la`` holds prior LLRs ln P(0)/P(1) for the two coded bits of each
    trellis step.  With ``terminated`` the final state is pinned to 0 as
    well; otherwise every final state is equally likely.  Returns
    (app_coded, app_info): a posteriori LLRs for every coded bit and every
    step input.
    """
    la = np.asarray(la, dtype=np.float64)
    next_state = np.asarray(next_state, dtype=np.int64)
    out_bits = np.asarray(out_bits, dtype=np.int8)
    n_states = next_state.shape[0]
    n_steps = la.size // 2
    if la.size != 2 * n_steps or n_steps == 0:
        raise ValueError("prior vector must hold two LLRs per trellis step")

    sign0 = 1.0 - 2.0 * out_bits[:, :, 0].astype(np.float64)
    sign1 = 1.0 - 2.0 * out_bits[:, :, 1].astype(np.float64)
    flat_next = next_state.reshape(-1)
    u_mask = np.tile([True, False], n_states)  # u = 0 transitions in flat order
    c0_mask = out_bits[:, :, 0].reshape(-1) == 0
    c1_mask = out_bits[:, :, 1].reshape(-1) == 0

    alpha = np.full((n_steps + 1, n_states), -np.inf)
    alpha[0, 0] = 0.0
    for t in range(n_steps):
        g = 0.5 * (sign0 * la[2 * t] + sign1 * la[2 * t + 1])
        vals = (alpha[t][:, None] + g).reshape(-1)
        nxt = np.full(n_states, -np.inf)
        np.logaddexp.at(nxt, flat_next, vals)
        alpha[t + 1] = nxt - nxt.max()

    beta = np.full((n_steps + 1, n_states), -np.inf)
    if terminated:
        beta[n_steps, 0] = 0.0
    else:
        beta[n_steps, :] = 0.0
    for t in range(n_steps - 1, -1, -1):
        g = 0.5 * (sign0 * la[2 * t] + sign1 * la[2 * t + 1])
        vals = beta[t + 1][flat_next] + g.reshape(-1)
        cur = np.logaddexp(vals[0::2], vals[1::2])  # reduce over u for each state
        beta[t] = cur - cur.max()

    app_coded = np.empty(2 * n_steps)
    app_info = np.empty(n_steps)
    for t in range(n_steps):
        g = 0.5 * (sign0 * la[2 * t] + sign1 * la[2 * t + 1])
        m = (alpha[t][:, None] + g + beta[t + 1][next_state]).reshape(-1)
        app_info[t] = _masked_llr(m, u_mask)
        app_coded[2 * t] = _masked_llr(m, c0_mask)
        app_coded[2 * t + 1] = _masked_llr(m, c1_mask)
    return app_coded, app_info


def _masked_llr(metrics, zero_mask):
    num = metrics[zero_mask]
    den = metrics[~zero_mask]
    top = np.logaddexp.reduce(num) if num.size else -np.inf
    bot = np.logaddexp.reduce(den) if den.size else -np.inf
    return top - bot
