# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Z/2 column reduction and product-boundary assembly."""

from libcpp.vector cimport vector
from libc.stdint cimport int32_t, int64_t, uint8_t

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _symdiff(const int32_t* a, Py_ssize_t na, const int32_t* b, Py_ssize_t nb,
                          vector[int32_t]& out) noexcept nogil:
    cdef Py_ssize_t i = 0, j = 0
    out.clear()
    while i < na and j < nb:
        if a[i] < b[j]:
            out.push_back(a[i]); i += 1
        elif b[j] < a[i]:
            out.push_back(b[j]); j += 1
        else:
            i += 1; j += 1
    while i < na:
        out.push_back(a[i]); i += 1
    while j < nb:
        out.push_back(b[j]); j += 1


def reduce_columns(cnp.int64_t[::1] indptr, cnp.int32_t[::1] indices,
                   cnp.int64_t[::1] block_starts, bint clearing=False, bint record=False):
    """Left-to-right reduction; see the pure-Python twin for the contract."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t nblocks = block_starts.shape[0] - 1
    low_arr = np.full(n, -1, dtype=np.int64)
    owner_arr = np.full(n, -1, dtype=np.int32)
    rstart_arr = np.full(n, -1, dtype=np.int64)
    rlen_arr = np.zeros(n, dtype=np.int32)
    cleared_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.int64_t[::1] low = low_arr
    cdef cnp.int32_t[::1] owner = owner_arr
    cdef cnp.int64_t[::1] rstart = rstart_arr
    cdef cnp.int32_t[::1] rlen = rlen_arr
    cdef uint8_t[::1] cleared = cleared_arr
    cdef vector[int32_t] pool, tpool, work, tmp, twork
    cdef vector[int64_t] tstart, tlen
    cdef Py_ssize_t b, blk, j, k, lo, hi, i
    cdef int32_t p
    cdef bint modified
    cdef const int32_t* src
    cdef Py_ssize_t srclen
    cdef const int32_t* ind = &indices[0] if indices.shape[0] > 0 else NULL
    cdef vector[int64_t] rec_start, rec_len
    if record:
        tstart.resize(n)
        tlen.resize(n)
        rec_start.resize(n)
        rec_len.resize(n)

    with nogil:
        for b in range(nblocks):
            blk = nblocks - 1 - b if clearing else b
            lo = block_starts[blk]
            hi = block_starts[blk + 1]
            for j in range(lo, hi):
                if clearing and cleared[j]:
                    continue
                work.clear()
                for i in range(indptr[j], indptr[j + 1]):
                    work.push_back(ind[i])
                if record:
                    twork.clear()
                    twork.push_back(<int32_t>j)
                modified = False
                while work.size() > 0:
                    p = work.back()
                    k = owner[p]
                    if k < 0:
                        break
                    if rstart[p] < 0:
                        src = ind + indptr[k]
                        srclen = indptr[k + 1] - indptr[k]
                    else:
                        src = pool.data() + rstart[p]
                        srclen = rlen[p]
                    _symdiff(work.data(), work.size(), src, srclen, tmp)
                    work.swap(tmp)
                    modified = True
                    if record:
                        _symdiff(twork.data(), twork.size(), tpool.data() + tstart[k], tlen[k], tmp)
                        twork.swap(tmp)
                if work.size() > 0:
                    p = work.back()
                    owner[p] = <int32_t>j
                    low[j] = p
                    if modified:
                        rstart[p] = pool.size()
                        rlen[p] = <int32_t>work.size()
                        for i in range(<Py_ssize_t>work.size()):
                            pool.push_back(work[i])
                    if clearing:
                        cleared[p] = 1
                if record:
                    tstart[j] = tpool.size()
                    tlen[j] = twork.size()
                    for i in range(<Py_ssize_t>twork.size()):
                        tpool.push_back(twork[i])
                    rec_start[j] = -1
                    rec_len[j] = work.size()
                    if work.size() > 0 and modified:
                        rec_start[j] = rstart[work.back()]

    if not record:
        return low_arr, None, None
    r_indptr = np.zeros(n + 1, dtype=np.int64)
    t_indptr = np.zeros(n + 1, dtype=np.int64)
    for j in range(n):
        r_indptr[j + 1] = r_indptr[j] + rec_len[j]
        t_indptr[j + 1] = t_indptr[j] + tlen[j]
    r_ind = np.empty(r_indptr[n], dtype=np.int64)
    t_ind = np.empty(t_indptr[n], dtype=np.int64)
    for j in range(n):
        if rec_len[j]:
            if rec_start[j] < 0:
                r_ind[r_indptr[j]:r_indptr[j + 1]] = indices[indptr[j]:indptr[j + 1]]
            else:
                for i in range(rec_len[j]):
                    r_ind[r_indptr[j] + i] = pool[rec_start[j] + i]
        for i in range(tlen[j]):
            t_ind[t_indptr[j] + i] = tpool[tstart[j] + i]
    return low_arr, (r_indptr, r_ind), (t_indptr, t_ind)


def product_csc(cnp.int64_t[::1] order, cnp.int32_t[::1] pos, Py_ssize_t nF,
                cnp.int64_t[::1] b_indptr, cnp.int64_t[::1] b_indices,
                cnp.int64_t[::1] f_indptr, cnp.int64_t[::1] f_indices):
    """Boundary of the product cells listed in ``order``, rows as filtration positions."""
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t j, t, s, c, total = 0
    cdef int64_t cid, bb, ff
    indptr_arr = np.zeros(n + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] indptr = indptr_arr
    with nogil:
        for j in range(n):
            cid = order[j]
            bb = cid // nF
            ff = cid - bb * nF
            total += (b_indptr[bb + 1] - b_indptr[bb]) + (f_indptr[ff + 1] - f_indptr[ff])
            indptr[j + 1] = total
    indices_arr = np.empty(total, dtype=np.int32)
    cdef cnp.int32_t[::1] out = indices_arr
    cdef int32_t key
    with nogil:
        for j in range(n):
            cid = order[j]
            bb = cid // nF
            ff = cid - bb * nF
            c = indptr[j]
            for t in range(b_indptr[bb], b_indptr[bb + 1]):
                out[c] = pos[b_indices[t] * nF + ff]; c += 1
            for t in range(f_indptr[ff], f_indptr[ff + 1]):
                out[c] = pos[bb * nF + f_indices[t]]; c += 1
            # insertion sort; columns hold at most twice the cell dimension entries
            for t in range(indptr[j] + 1, indptr[j + 1]):
                key = out[t]
                s = t - 1
                while s >= indptr[j] and out[s] > key:
                    out[s + 1] = out[s]
                    s -= 1
                out[s + 1] = key
    return indptr_arr, indices_arr
