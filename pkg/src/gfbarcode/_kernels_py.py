"""Pure-Python twins of the compiled kernels (same signatures, same results)."""

from __future__ import annotations

import numpy as np


def reduce_columns(indptr, indices, block_starts, clearing=False, record=False):
    """Z/2 left-to-right column reduction.

    Columns are processed left to right inside each block of ``block_starts``;
    with ``clearing`` the blocks run from last to first and every pivot row
    found is zeroed before its own block is reached. Returns ``(low, R, T)``
    where ``low[j]`` is the pivot row of reduced column ``j`` (``-1`` if zero)
    and, when ``record`` is set, ``R`` and ``T`` are ``(indptr, indices)``
    pairs with ``R = D T``.
    """
    n = len(indptr) - 1
    low = np.full(n, -1, dtype=np.int64)
    owner = {}
    reduced = {}
    cleared = set()
    rcols, tcols = [None] * n, [None] * n
    nb = len(block_starts) - 1
    blocks = range(nb - 1, -1, -1) if clearing else range(nb)
    for blk in blocks:
        for j in range(int(block_starts[blk]), int(block_starts[blk + 1])):
            if clearing and j in cleared:
                continue
            col = set(indices[indptr[j]:indptr[j + 1]].tolist())
            tc = {j} if record else None
            while col:
                p = max(col)
                k = owner.get(p)
                if k is None:
                    break
                col ^= reduced[k]
                if record:
                    tc ^= tcols[k]
            if col:
                p = max(col)
                owner[p] = j
                low[j] = p
                reduced[j] = col
                if clearing:
                    cleared.add(p)
            if record:
                rcols[j] = col
                tcols[j] = tc
    if not record:
        return low, None, None
    return low, _pack(rcols), _pack(tcols)


def _pack(cols):
    indptr = np.zeros(len(cols) + 1, dtype=np.int64)
    flat = []
    for j, c in enumerate(cols):
        s = sorted(c)
        flat.extend(s)
        indptr[j + 1] = indptr[j] + len(s)
    return indptr, np.asarray(flat, dtype=np.int64)


def product_csc(order, pos, nF, b_indptr, b_indices, f_indptr, f_indices):
    """Boundary of the product cells in ``order`` with rows as filtration positions."""
    order = np.asarray(order, dtype=np.int64)
    b, f = np.divmod(order, nF)
    bl = b_indptr[b + 1] - b_indptr[b]
    fl = f_indptr[f + 1] - f_indptr[f]
    lens = bl + fl
    indptr = np.zeros(order.size + 1, dtype=np.int64)
    np.cumsum(lens, out=indptr[1:])
    rows_b = b_indices[_ranges(b_indptr[b], b_indptr[b + 1])] * nF + np.repeat(f, bl)
    rows_f = np.repeat(b, fl) * nF + f_indices[_ranges(f_indptr[f], f_indptr[f + 1])]
    cols = np.concatenate([np.repeat(np.arange(order.size), bl), np.repeat(np.arange(order.size), fl)])
    rows = np.asarray(pos)[np.concatenate([rows_b, rows_f])]
    srt = np.lexsort((rows, cols))
    return indptr, rows[srt].astype(np.int32)


def _ranges(starts, ends):
    lens = np.asarray(ends - starts, dtype=np.int64)
    rep = np.repeat(starts - np.cumsum(lens) + lens, lens)
    return np.arange(lens.sum()) + rep
