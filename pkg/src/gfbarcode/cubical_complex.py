"""Cubical complexes on ball-restricted lattices and the relative product pair.

A cell is an integer anchor plus a set of unit directions (a bit mask); it
belongs to a complex when all of its corners are lattice points of the ball.
Cells are kept in canonical order, lexicographic by anchor and then by the
direction mask, and every boundary matrix is a Z/2 matrix in compressed
sparse column form with sorted row indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .errors import EmptyComplex, MemoryCapExceeded, MeshMismatch


# ---------------------------------------------------------------------------
# lattice helpers

def ball_lattice(radius_units: float, d: int) -> np.ndarray:
    """Integer points ``k`` with ``|k| <= radius_units``, in lexicographic order."""
    r2 = radius_units * radius_units + 1e-9
    pts = np.zeros((1, 0), dtype=np.int64)
    rem = np.array([r2])
    for _ in range(d):
        top = np.floor(np.sqrt(np.maximum(rem, 0.0))).astype(np.int64)
        counts = 2 * top + 1
        rep = np.repeat(np.arange(pts.shape[0]), counts)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        coord = np.arange(rep.size) - starts - np.repeat(top, counts)
        pts = np.concatenate([pts[rep], coord[:, None]], axis=1)
        rem = rem[rep] - coord.astype(float) ** 2
    return pts


def ball_lattice_count(radius_units: float, d: int) -> int:
    """Number of points returned by :func:`ball_lattice`, without building them."""
    r2 = radius_units * radius_units + 1e-9
    if d == 1:
        return 2 * int(math.floor(math.sqrt(r2))) + 1
    top = int(math.floor(math.sqrt(r2)))
    return sum(ball_lattice_count(math.sqrt(max(r2 - 1e-9 - c * c, 0.0)), d - 1)
               for c in range(-top, top + 1))


def _xor_sorted(rows: np.ndarray, cols: np.ndarray, ncols: int):
    """CSC arrays from (row, col) pairs, cancelling duplicates mod 2."""
    if rows.size:
        order = np.lexsort((rows, cols))
        rows, cols = rows[order], cols[order]
        same = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
        keep = np.ones(rows.size, dtype=bool)
        # pairs of equal entries cancel; runs are at most 2 long here but be general
        run_start = np.concatenate([[True], ~same])
        run_id = np.cumsum(run_start) - 1
        run_len = np.bincount(run_id)
        first = np.flatnonzero(run_start)
        keep[:] = False
        keep[first[run_len % 2 == 1]] = True
        rows, cols = rows[keep], cols[keep]
    indptr = np.zeros(ncols + 1, dtype=np.int64)
    np.cumsum(np.bincount(cols, minlength=ncols), out=indptr[1:])
    return indptr, rows.astype(np.int64)


def csc_matrix(indptr, indices, nrows) -> sp.csc_matrix:
    data = np.ones(indices.size, dtype=np.int8)
    return sp.csc_matrix((data, indices, indptr), shape=(nrows, indptr.size - 1))


def is_chain_complex(indptr, indices, nrows) -> bool:
    """``d o d = 0`` over Z/2 for a square boundary matrix."""
    D = csc_matrix(indptr, indices, nrows).astype(np.int64)
    DD = (D @ D).tocoo()
    return not np.any(DD.data % 2)


# ---------------------------------------------------------------------------
# single cubical complex

@dataclass
class CubicalComplex:
    """Full cubical complex generated by the lattice points of a ball."""

    dim: int
    mesh: int
    radius: float
    anchors: np.ndarray
    dirs: np.ndarray
    degree: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    in_boundary: np.ndarray = field(default=None)

    @property
    def size(self) -> int:
        return self.dirs.size

    @property
    def vertex_cells(self) -> np.ndarray:
        return np.flatnonzero(self.degree == 0)

    def counts(self) -> list[int]:
        return np.bincount(self.degree, minlength=self.dim + 1).tolist()

    def corners(self, cells: np.ndarray) -> np.ndarray:
        """Cell indices of the corners of same-degree ``cells``; shape ``(len, 2^k)``."""
        cells = np.asarray(cells)
        if cells.size == 0:
            return np.zeros((0, 1), dtype=np.int64)
        k = int(self.degree[cells[0]])
        anchors = self.anchors[cells]
        masks = self.dirs[cells]
        out = np.empty((cells.size, 1 << k), dtype=np.int64)
        bits = _mask_bits(masks, self.dim, k)
        for c in range(1 << k):
            off = np.zeros_like(anchors)
            for t in range(k):
                if c >> t & 1:
                    off[np.arange(cells.size), bits[:, t]] += 1
            out[:, c] = self.lookup(anchors + off, np.zeros(cells.size, dtype=np.int64))
        return out

    def lookup(self, anchors, masks) -> np.ndarray:
        keys = self._keys(anchors, masks)
        pos = np.searchsorted(self._sorted_keys, keys)
        pos = np.minimum(pos, self._sorted_keys.size - 1)
        if np.any(self._sorted_keys[pos] != keys):
            raise KeyError("cell not in complex")
        return pos

    def _keys(self, anchors, masks):
        a = np.asarray(anchors, dtype=np.int64) + self._offset
        key = np.zeros(a.shape[:-1], dtype=np.int64)
        for i in range(self.dim):
            key = key * self._base + a[..., i]
        return (key << self.dim) | np.asarray(masks, dtype=np.int64)

    def boundary_csc(self):
        return self.indptr, self.indices


def _mask_bits(masks, d, k):
    """Positions of the set bits of each mask, ascending; shape ``(len, k)``."""
    bits = np.zeros((masks.size, k), dtype=np.int64)
    fill = np.zeros(masks.size, dtype=np.int64)
    for i in range(d):
        on = (masks >> i) & 1 == 1
        bits[on, fill[on]] = i
        fill[on] += 1
    return bits


def full_complex(radius: float, m: int, d: int) -> CubicalComplex:
    """All cubes whose corners lie in ``(1/m) Z^d`` within ``radius + sqrt(d)/m``."""
    if m < 1 or not radius > 0:
        raise EmptyComplex("mesh must be >= 1 and radius positive")
    verts = ball_lattice(radius * m + math.sqrt(d), d)
    if verts.shape[0] == 0:
        raise EmptyComplex("the ball contains no lattice point")
    offset = -verts.min(axis=0)
    base = int((verts.max(axis=0) + offset).max()) + 2
    if base ** d * (1 << d) >= 2 ** 62:
        raise MemoryCapExceeded(base ** d, 2 ** 62)

    def vkey(a):
        a = a + offset
        key = np.zeros(a.shape[0], dtype=np.int64)
        for i in range(d):
            key = key * base + a[:, i]
        return key

    vkeys = vkey(verts)  # sorted, since verts are lexicographic
    all_anchor, all_mask = [], []
    for k in range(d + 1):
        for D in combinations(range(d), k):
            ok = np.ones(verts.shape[0], dtype=bool)
            for r in range(1, k + 1):
                for S in combinations(D, r):
                    off = np.zeros(d, dtype=np.int64)
                    off[list(S)] = 1
                    ck = vkey(verts + off)
                    pos = np.minimum(np.searchsorted(vkeys, ck), vkeys.size - 1)
                    ok &= vkeys[pos] == ck
            mask = sum(1 << i for i in D)
            all_anchor.append(verts[ok])
            all_mask.append(np.full(int(ok.sum()), mask, dtype=np.int64))
    anchors = np.concatenate(all_anchor)
    masks = np.concatenate(all_mask)
    keys = (vkey(anchors) << d) | masks
    order = np.argsort(keys, kind="stable")
    anchors, masks, keys = anchors[order], masks[order], keys[order]
    degree = np.zeros(masks.size, dtype=np.int8)
    for i in range(d):
        degree += ((masks >> i) & 1).astype(np.int8)

    cx = CubicalComplex(d, m, radius, anchors, masks, degree,
                        np.zeros(masks.size + 1, dtype=np.int64), np.zeros(0, dtype=np.int64))
    cx._offset = offset
    cx._base = base
    cx._sorted_keys = keys

    rows, cols = [], []
    for i in range(d):
        has = np.flatnonzero((masks >> i) & 1)
        if has.size == 0:
            continue
        fm = masks[has] & ~(1 << i)
        e = np.zeros(d, dtype=np.int64)
        e[i] = 1
        lo = cx.lookup(anchors[has], fm)
        hi = cx.lookup(anchors[has] + e, fm)
        rows += [lo, hi]
        cols += [has, has]
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    cx.indptr, cx.indices = _xor_sorted(rows, cols, masks.size)
    cx.in_boundary = _topological_boundary(cx)
    return cx


def _faces_of(cx, cells_mask):
    """Mask of the cells that are faces of some cell in ``cells_mask``."""
    cols = np.flatnonzero(cells_mask)
    out = np.zeros(cx.size, dtype=bool)
    out[cx.indices[_ranges(cx.indptr[cols], cx.indptr[cols + 1])]] = True
    return out


def _ranges(starts, ends):
    lens = np.asarray(ends - starts, dtype=np.int64)
    rep = np.repeat(starts - np.cumsum(lens) + lens, lens)
    return np.arange(lens.sum()) + rep


def _down_closure(cx, seed):
    closed = seed.copy()
    for k in range(cx.dim, 0, -1):
        closed |= _faces_of(cx, closed & (cx.degree == k))
    return closed


def _topological_boundary(cx) -> np.ndarray:
    """Free codimension-one faces of the top cubes, plus every cell outside
    the closure of the top cubes, closed under taking faces."""
    d = cx.dim
    top = cx.degree == d
    if not top.any():
        return np.ones(cx.size, dtype=bool)
    cols = np.flatnonzero(top)
    cofaces = np.bincount(cx.indices[_ranges(cx.indptr[cols], cx.indptr[cols + 1])],
                          minlength=cx.size)
    free = (cx.degree == d - 1) & (cofaces == 1)
    covered = _down_closure(cx, top)
    return _down_closure(cx, free | ~covered)


# ---------------------------------------------------------------------------
# the two factors of the product

@dataclass
class BasePair:
    """Quotient ``X / dX``: cell 0 is the collapsed boundary vertex."""

    complex: CubicalComplex
    cells: np.ndarray          # X cell index per quotient cell (-1 for the collapsed vertex)
    degree: np.ndarray
    quotient_map: np.ndarray   # X cell -> quotient cell, -1 for deleted cells
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def size(self) -> int:
        return self.cells.size

    def counts(self) -> list[int]:
        return np.bincount(self.degree, minlength=self.complex.dim + 1).tolist()


@dataclass
class FiberPair:
    """Cubical ball ``Y`` relative to ``Y0``, boundary cells in the ``xi^+ = 0`` plane."""

    complex: CubicalComplex
    index: int
    in_Y0: np.ndarray
    cells: np.ndarray          # Y cell index per relative cell
    degree: np.ndarray
    relative_map: np.ndarray   # Y cell -> relative cell, -1 for Y0
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def size(self) -> int:
        return self.cells.size

    def counts(self) -> list[int]:
        return np.bincount(self.degree, minlength=self.complex.dim + 1).tolist()


def _remap_boundary(cx, keep_cells, row_map):
    """Boundary of ``keep_cells`` with rows sent through ``row_map`` (``-1`` drops)."""
    starts, ends = cx.indptr[keep_cells], cx.indptr[keep_cells + 1]
    lens = ends - starts
    idx = _ranges(starts, ends)
    col_ids = np.repeat(np.arange(keep_cells.size), lens)
    rows = row_map[cx.indices[idx]]
    ok = rows >= 0
    return _xor_sorted(rows[ok], col_ids[ok], keep_cells.size)


def build_base_pair(Rb: float, m: int, n: int) -> BasePair:
    """Full complex on the base ball and its quotient by the boundary."""
    cx = full_complex(Rb, m, 2 * n)
    if not np.any(cx.degree == 2 * n):
        raise EmptyComplex("base ball contains no top-dimensional cube")
    bd = cx.in_boundary
    inner = np.flatnonzero(~bd)
    qmap = np.full(cx.size, -1, dtype=np.int64)
    qmap[inner] = np.arange(1, inner.size + 1)
    qmap[bd & (cx.degree == 0)] = 0
    cells = np.concatenate([[-1], inner])
    degree = np.concatenate([[0], cx.degree[inner]]).astype(np.int8)
    indptr, indices = _remap_boundary(cx, inner, qmap)
    indptr = np.concatenate([[0], indptr])
    pair = BasePair(cx, cells, degree, qmap, indptr, indices)
    if not is_chain_complex(indptr, indices, cells.size):
        raise EmptyComplex("quotient boundary does not square to zero")
    return pair


def build_fiber_pair(Rf: float, m: int, d: int, index: int) -> FiberPair:
    """Fiber ball ``Y`` and the sub-complex ``Y0`` of boundary cells with ``xi^+ = 0``."""
    if d != 2 * index:
        raise MeshMismatch("fiber dimension must be twice the quadratic index")
    cx = full_complex(Rf, m, d)
    plus_zero = np.all(cx.anchors[:, index:] == 0, axis=1)
    plus_dirs = ((cx.dirs >> index) == 0)
    in_Y0 = cx.in_boundary & plus_zero & plus_dirs
    keep = np.flatnonzero(~in_Y0)
    rmap = np.full(cx.size, -1, dtype=np.int64)
    rmap[keep] = np.arange(keep.size)
    indptr, indices = _remap_boundary(cx, keep, rmap)
    pair = FiberPair(cx, index, in_Y0, keep, cx.degree[keep].astype(np.int8), rmap, indptr, indices)
    if not is_chain_complex(indptr, indices, keep.size):
        raise EmptyComplex("relative fiber boundary does not square to zero")
    return pair


# ---------------------------------------------------------------------------
# product

@dataclass
class ProductComplex:
    """Relative pair ``(K, L)``; product cell ``(b, f)`` has id ``b * nF + f``.

    Its boundary is ``(d b) x f + b x (d f)`` over Z/2, i.e. the block matrix
    built from ``d(X/dX) (x) Id`` and ``Id (x) d(Y, Y0)``. Since both factors
    square to zero the product does too; small products are also checked
    directly.
    """

    base: BasePair
    fiber: FiberPair

    @property
    def nB(self) -> int:
        return self.base.size

    @property
    def nF(self) -> int:
        return self.fiber.size

    @property
    def size(self) -> int:
        return self.nB * self.nF

    @property
    def top_degree(self) -> int:
        return self.base.complex.dim + self.fiber.complex.dim

    def degree_counts(self) -> list[int]:
        bc = np.bincount(self.base.degree, minlength=self.base.complex.dim + 1)
        fc = np.bincount(self.fiber.degree, minlength=self.fiber.complex.dim + 1)
        return np.convolve(bc, fc).astype(np.int64).tolist()

    def degrees(self) -> np.ndarray:
        return (self.base.degree[:, None] + self.fiber.degree[None, :]).ravel()

    def boundary_of(self, ids) -> tuple[np.ndarray, np.ndarray]:
        """CSC (indptr, product ids) of the boundaries of ``ids``, rows sorted by id."""
        ids = np.asarray(ids, dtype=np.int64)
        b, f = np.divmod(ids, self.nF)
        bs, be = self.base.indptr[b], self.base.indptr[b + 1]
        fs, fe = self.fiber.indptr[f], self.fiber.indptr[f + 1]
        bl, fl = be - bs, fe - fs
        rows_b = self.base.indices[_ranges(bs, be)] * self.nF + np.repeat(f, bl)
        rows_f = np.repeat(b, fl) * self.nF + self.fiber.indices[_ranges(fs, fe)]
        cols = np.concatenate([np.repeat(np.arange(ids.size), bl), np.repeat(np.arange(ids.size), fl)])
        return _xor_sorted(np.concatenate([rows_b, rows_f]), cols, ids.size)

    def degree_matrix(self, j: int):
        """Boundary ``C_j -> C_{j-1}`` with column and row product-id maps."""
        deg = self.degrees()
        cols = np.flatnonzero(deg == j)
        rows = np.flatnonzero(deg == j - 1)
        indptr, ind = self.boundary_of(cols)
        local = np.full(self.size, -1, dtype=np.int64)
        local[rows] = np.arange(rows.size)
        return csc_matrix(indptr, local[ind], rows.size), cols, rows

    def check_chain_complex(self) -> bool:
        ids = np.arange(self.size)
        indptr, ind = self.boundary_of(ids)
        return is_chain_complex(indptr, ind, self.size)

    def write_triplets(self, path) -> None:
        """One ``j row col`` line per nonzero, row/col local to each degree."""
        with open(path, "w") as fh:
            for j in range(1, self.top_degree + 1):
                mat, _, _ = self.degree_matrix(j)
                coo = mat.tocoo()
                order = np.lexsort((coo.row, coo.col))
                for r, c in zip(coo.row[order], coo.col[order]):
                    fh.write(f"{j} {r} {c}\n")


def product_boundaries(base: BasePair, fiber: FiberPair) -> ProductComplex:
    if base.complex.mesh != fiber.complex.mesh:
        raise MeshMismatch("base and fiber complexes use different meshes")
    prod = ProductComplex(base, fiber)
    if prod.size <= 20000 and not prod.check_chain_complex():
        raise EmptyComplex("product boundary does not square to zero")
    return prod


def predicted_cell_count(Rb: float, Rf: float, m: int, n: int, N: int) -> int:
    """``|X^0| |Y^0| 4^{nN}``: vertex counts times the number of direction choices."""
    d = 2 * n * (N - 1)
    b0 = ball_lattice_count(Rb * m + math.sqrt(2 * n), 2 * n)
    f0 = ball_lattice_count(Rf * m + math.sqrt(d), d)
    return b0 * f0 * 4 ** (n * N)
