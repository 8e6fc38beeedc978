"""Filtration of the relative product complex by the sampled GFQI.

Vertices get GFQI values, every cell gets the maximum over its corners, and
cells are ordered by degree, then value, then canonical cell id. The boundary
matrix is re-expressed with rows and columns in that order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .cubical_complex import ProductComplex, csc_matrix
from .errors import NonMonotone
from .generating_functions import GfqiSpec, eval_gfqi, q_form


@dataclass
class FilteredBoundaryMatrix:
    degrees: np.ndarray      # unshifted degree per position
    values: np.ndarray       # filtration value per position
    cell_ids: np.ndarray     # original cell id per position
    indptr: np.ndarray
    indices: np.ndarray      # row positions, sorted within each column
    index_shift: int = 0

    @property
    def size(self) -> int:
        return self.values.size

    def column(self, j: int) -> np.ndarray:
        return self.indices[self.indptr[j]:self.indptr[j + 1]]

    def block_starts(self) -> np.ndarray:
        """Start positions of the degree blocks (with the end appended)."""
        if self.size == 0:
            return np.zeros(1, dtype=np.int64)
        change = np.flatnonzero(np.diff(self.degrees)) + 1
        return np.concatenate([[0], change, [self.size]]).astype(np.int64)

    def to_scipy(self):
        return csc_matrix(self.indptr, self.indices, self.size)

    def check(self) -> None:
        """Raise :class:`NonMonotone` unless faces precede and never exceed their cells."""
        check_monotone(self.indptr, self.indices, self.values, self.degrees)

    def write_dump(self, order_path, matrix_path) -> None:
        with open(order_path, "w") as fh:
            for d, v, c in zip(self.degrees, self.values, self.cell_ids):
                fh.write(f"{int(d) - self.index_shift} {float(v)!r} {int(c)}\n")
        # same "j row col" triplets as the unfiltered complex, local to each degree block
        starts = self.block_starts()
        first = {int(self.degrees[s]): int(s) for s in starts[:-1]}
        with open(matrix_path, "w") as fh:
            for j in range(self.size):
                d = int(self.degrees[j])
                for r in self.column(j):
                    fh.write(f"{d} {int(r) - first[d - 1]} {j - first[d]}\n")

    @classmethod
    def from_cells(cls, degrees, values, boundaries, index_shift: int = 0):
        """Filter an explicit cell list; ``boundaries[c]`` lists the faces of cell ``c``."""
        degrees = np.asarray(degrees, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        n = degrees.size
        for c, faces in enumerate(boundaries):
            for f in faces:
                if degrees[f] != degrees[c] - 1:
                    raise NonMonotone(f"cell {c} has face {f} of the wrong degree")
        order = np.lexsort((np.arange(n), values, degrees))
        pos = np.empty(n, dtype=np.int64)
        pos[order] = np.arange(n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        flat = []
        for j, c in enumerate(order):
            col = sorted({int(pos[f]) for f in boundaries[c]
                          if list(boundaries[c]).count(f) % 2 == 1})
            flat.extend(col)
            indptr[j + 1] = len(flat)
        fm = cls(degrees[order], values[order], order.astype(np.int64), indptr,
                 np.asarray(flat, dtype=np.int32), index_shift)
        fm.check()
        return fm


def check_monotone(indptr, indices, values, degrees, chunk: int = 1 << 22) -> None:
    n = values.size
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        a, b = indptr[lo], indptr[hi]
        rows = indices[a:b]
        cols = np.repeat(np.arange(lo, hi), np.diff(indptr[lo:hi + 1]))
        if rows.size == 0:
            continue
        if np.any(values[rows] > values[cols]):
            bad = int(cols[np.argmax(values[rows] > values[cols])])
            raise NonMonotone(f"cell at position {bad} is below one of its faces")
        if np.any(degrees[rows] != degrees[cols] - 1) or np.any(rows >= cols):
            raise NonMonotone("boundary rows are not earlier faces of one degree less")


def vertex_values(gfqi: GfqiSpec, prod: ProductComplex, chunk: int = 1 << 20) -> np.ndarray:
    """GFQI at every (base vertex, fiber vertex) pair; shape ``(|X^0|, |Y^0|)``."""
    xv = prod.base.complex.anchors[prod.base.complex.vertex_cells]
    yv = prod.fiber.complex.anchors[prod.fiber.complex.vertex_cells]
    out = np.empty((xv.shape[0], yv.shape[0]))
    rows = max(1, chunk // max(1, yv.shape[0]))
    for lo in range(0, xv.shape[0], rows):
        out[lo:lo + rows] = eval_gfqi(gfqi, xv[lo:lo + rows, None, :], yv[None, :, :])
    return out


def cell_values(gfqi: GfqiSpec, prod: ProductComplex) -> np.ndarray:
    """Max-extension of the vertex sample to every product cell; shape ``(nB, nF)``."""
    X, Y = prod.base.complex, prod.fiber.complex
    xrow = np.full(X.size, -1, dtype=np.int64)
    xrow[X.vertex_cells] = np.arange(X.vertex_cells.size)
    yrow = np.full(Y.size, -1, dtype=np.int64)
    yrow[Y.vertex_cells] = np.arange(Y.vertex_cells.size)
    V = vertex_values(gfqi, prod)
    yv = Y.anchors[Y.vertex_cells]
    qv = q_form(yv, gfqi.mesh)

    nF = prod.nF
    W = np.empty((V.shape[0], nF))
    qmax = np.empty(nF)
    for k in range(Y.dim + 1):
        sel = np.flatnonzero(prod.fiber.degree == k)
        if sel.size == 0:
            continue
        corners = yrow[Y.corners(prod.fiber.cells[sel])]
        W[:, sel] = V[:, corners[:, 0]]
        qmax[sel] = qv[corners[:, 0]]
        for c in range(1, corners.shape[1]):
            W[:, sel] = np.maximum(W[:, sel], V[:, corners[:, c]])
            qmax[sel] = np.maximum(qmax[sel], qv[corners[:, c]])
    del V

    vals = np.empty((prod.nB, nF))
    vals[0] = qmax
    base_cells = prod.base.cells
    for k in range(X.dim + 1):
        sel = np.flatnonzero((prod.base.degree == k) & (base_cells >= 0))
        if sel.size == 0:
            continue
        corners = xrow[X.corners(base_cells[sel])]
        step = max(1, (1 << 22) // nF)
        for lo in range(0, sel.size, step):
            part = corners[lo:lo + step]
            acc = W[part[:, 0]]
            for c in range(1, part.shape[1]):
                np.maximum(acc, W[part[:, c]], out=acc)
            vals[sel[lo:lo + step]] = acc
    return vals


def filter_complex(gfqi: GfqiSpec, prod: ProductComplex, backend=None) -> FilteredBoundaryMatrix:
    """Sample, order and permute the relative product complex."""
    kern = _backend.backend(backend)
    vals = cell_values(gfqi, prod).ravel()
    deg = prod.degrees().astype(np.int8)
    order = np.lexsort((vals, deg))  # stable: equal keys keep canonical id order
    pos = np.empty(order.size, dtype=np.int32)
    pos[order] = np.arange(order.size, dtype=np.int32)
    indptr, indices = kern.product_csc(
        order.astype(np.int64), pos, prod.nF,
        prod.base.indptr.astype(np.int64), prod.base.indices.astype(np.int64),
        prod.fiber.indptr.astype(np.int64), prod.fiber.indices.astype(np.int64),
    )
    del pos
    fm = FilteredBoundaryMatrix(deg[order], vals[order], order, indptr,
                                np.asarray(indices, dtype=np.int32), gfqi.quad_index)
    fm.check()
    return fm


def _z2_rank(columns) -> int:
    basis = {}
    rank = 0
    for v in columns:
        while v:
            top = v.bit_length() - 1
            if top in basis:
                v ^= basis[top]
            else:
                basis[top] = v
                rank += 1
                break
    return rank


def sublevel_betti(filtered: FilteredBoundaryMatrix, t: float) -> dict:
    """Ranks of the homology of the sub-complex of cells with value ``< t``.

    Keys are degrees after subtracting the index shift; dense elimination, so
    only meant for small complexes.
    """
    keep = filtered.values < t
    degs = filtered.degrees.astype(np.int64)
    local = np.full(filtered.size, -1, dtype=np.int64)
    counts = {}
    for k in np.unique(degs):
        sel = np.flatnonzero(keep & (degs == k))
        local[sel] = np.arange(sel.size)
        counts[int(k)] = sel.size
    ranks = {}
    for k in counts:
        cols = []
        for j in np.flatnonzero(keep & (degs == k)):
            v = 0
            for r in filtered.column(j):
                v ^= 1 << int(local[r])
            cols.append(v)
        ranks[k] = _z2_rank(cols)
    return {k - filtered.index_shift: counts[k] - ranks[k] - ranks.get(k + 1, 0)
            for k in sorted(counts)}
