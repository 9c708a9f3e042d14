# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled elimination kernels over F_q (table-driven)."""

import numpy as np
cimport numpy as cnp

ctypedef cnp.int32_t i32


cdef int _eliminate(i32[:, ::1] m, int nrows, int ncols,
                    const i32[:, ::1] add, const i32[:, ::1] mul,
                    const i32[::1] neg, const i32[::1] inv,
                    int full, int* pivots) noexcept nogil:
    cdef int rank = 0, col, i, j, piv, start
    cdef i32 lead, s, f, nf, tmp
    for col in range(ncols):
        if rank == nrows:
            break
        piv = -1
        for i in range(rank, nrows):
            if m[i, col] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != rank:
            for j in range(ncols):
                tmp = m[rank, j]
                m[rank, j] = m[piv, j]
                m[piv, j] = tmp
        lead = m[rank, col]
        if lead != 1:
            s = inv[lead]
            for j in range(ncols):
                m[rank, j] = mul[s, m[rank, j]]
        start = 0 if full else rank + 1
        for i in range(start, nrows):
            if i == rank:
                continue
            f = m[i, col]
            if f != 0:
                nf = neg[f]
                for j in range(ncols):
                    m[i, j] = add[m[i, j], mul[nf, m[rank, j]]]
        pivots[rank] = col
        rank += 1
    return rank


def rref(cnp.ndarray mat, add, mul, neg, inv):
    """Return (rref rows, pivot list) of an int32 matrix."""
    cdef i32[:, ::1] m = np.ascontiguousarray(mat, dtype=np.int32).copy()
    cdef int nrows = m.shape[0], ncols = m.shape[1]
    cdef int[64] piv
    if ncols > 64:
        raise ValueError("ambient dimension above 64 is not supported")
    cdef int rank = _eliminate(m, nrows, ncols, add, mul, neg, inv, 1, piv)
    return np.asarray(m)[:rank].copy(), [piv[i] for i in range(rank)]


def stacked_ranks(cnp.ndarray prefix, cnp.ndarray blocks, add, mul, neg, inv):
    """rank([prefix; blocks[i]]) for every i; blocks is (n, s, k) int32."""
    cdef const i32[:, ::1] addv = add
    cdef const i32[:, ::1] mulv = mul
    cdef const i32[::1] negv = neg
    cdef const i32[::1] invv = inv
    cdef i32[:, ::1] p = np.ascontiguousarray(prefix, dtype=np.int32).copy()
    cdef const i32[:, :, ::1] b = np.ascontiguousarray(blocks, dtype=np.int32)
    cdef int ncols = p.shape[1]
    cdef int n = b.shape[0], s = b.shape[1]
    cdef int[64] ppiv
    cdef int[64] bpiv
    if ncols > 64:
        raise ValueError("ambient dimension above 64 is not supported")
    cdef int base = _eliminate(p, p.shape[0], ncols, addv, mulv, negv, invv, 1, ppiv)
    cdef i32[:, ::1] work = np.zeros((max(s, 1), ncols), dtype=np.int32)
    out_arr = np.empty(n, dtype=np.int32)
    cdef i32[::1] out = out_arr
    cdef int idx, r, j, t, c
    cdef i32 f, nf
    with nogil:
        for idx in range(n):
            for r in range(s):
                for j in range(ncols):
                    work[r, j] = b[idx, r, j]
                for t in range(base):
                    c = ppiv[t]
                    f = work[r, c]
                    if f != 0:
                        nf = negv[f]
                        for j in range(ncols):
                            work[r, j] = addv[work[r, j], mulv[nf, p[t, j]]]
            out[idx] = base + _eliminate(work, s, ncols, addv, mulv, negv, invv, 0, bpiv)
    return out_arr
