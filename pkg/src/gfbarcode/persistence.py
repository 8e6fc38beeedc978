"""Z/2 reduction of filtered boundary matrices, barcodes and bottleneck distance."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from . import _backend
from .filtration import FilteredBoundaryMatrix
from .generating_functions import GfqiSpec, c_of_r, gradient_bound

INF = math.inf


# ---------------------------------------------------------------------------
# barcodes

@dataclass
class Barcode:
    """Multiset of bars ``(degree, birth, death)``; ``death`` may be ``inf``."""

    bars: Counter = field(default_factory=Counter)

    @classmethod
    def from_bars(cls, bars) -> "Barcode":
        c = Counter()
        for bar in bars:
            d, b, e = bar[:3]
            mult = bar[3] if len(bar) > 3 else 1
            if not b < e:
                continue
            c[(int(d), float(b), float(e))] += int(mult)
        return cls(c)

    def records(self) -> list[dict]:
        out = []
        for (d, b, e), k in sorted(self.bars.items()):
            rec = {"degree": d, "birth": b}
            if e != INF:
                rec["death"] = e
            rec["multiplicity"] = k
            out.append(rec)
        return out

    def dumps(self) -> str:
        return json.dumps(self.records(), indent=1) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Barcode":
        recs = json.loads(text)
        return cls.from_bars((r["degree"], r["birth"], r.get("death", INF), r.get("multiplicity", 1))
                             for r in recs)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def read(cls, path) -> "Barcode":
        with open(path) as fh:
            return cls.loads(fh.read())

    def expanded(self, degree=None) -> list[tuple[float, float]]:
        out = []
        for (d, b, e), k in sorted(self.bars.items()):
            if degree is None or d == degree:
                out.extend([(b, e)] * k)
        return out

    def degrees(self) -> list[int]:
        return sorted({d for d, _, _ in self.bars})

    def infinite(self) -> list[tuple[int, float]]:
        return [(d, b) for (d, b, e), k in sorted(self.bars.items()) if e == INF for _ in range(k)]

    def finite(self) -> list[tuple[int, float, float]]:
        return [(d, b, e) for (d, b, e), k in sorted(self.bars.items()) if e != INF for _ in range(k)]

    def discard_shorter_than(self, length: float) -> "Barcode":
        return Barcode(Counter({k: v for k, v in self.bars.items() if k[2] - k[1] >= length}))

    def aggregated(self) -> "Barcode":
        """All degrees merged into degree 0 (the ungraded multiset)."""
        c = Counter()
        for (_, b, e), k in self.bars.items():
            c[(0, b, e)] += k
        return Barcode(c)

    def count(self) -> int:
        return sum(self.bars.values())

    def longest_finite(self) -> float:
        f = [e - b for b, e in ((b, e) for _, b, e in self.finite())]
        return max(f) if f else 0.0


# ---------------------------------------------------------------------------
# reduction

@dataclass
class ReductionResult:
    low: np.ndarray            # pivot row of each reduced column, -1 if zero
    reduced: tuple | None      # (indptr, indices) of R when recorded
    ops: tuple | None          # (indptr, indices) of T when recorded, R = D T
    strategy: str = "standard"

    @property
    def pairing(self) -> dict:
        cols = np.flatnonzero(self.low >= 0)
        return dict(zip(cols.tolist(), self.low[cols].tolist()))

    @property
    def unpaired(self) -> np.ndarray:
        pivots = np.zeros(self.low.size, dtype=bool)
        pivots[self.low[self.low >= 0]] = True
        return np.flatnonzero((self.low < 0) & ~pivots)


def reduce(filtered: FilteredBoundaryMatrix, strategy: str = "standard",
           record_ops: bool | None = None, backend=None) -> ReductionResult:
    """Left-to-right column reduction.

    ``standard`` processes every column in order; ``twist`` reduces degree
    blocks from the top down and zeroes columns already known to be pivots.
    Both yield the same pairing. ``record_ops`` (standard only) keeps ``R``
    and ``T``; it defaults to on for small matrices.
    """
    if strategy not in ("standard", "twist"):
        raise ValueError(f"unknown reduction strategy {strategy!r}")
    if record_ops is None:
        record_ops = strategy == "standard" and filtered.size <= 5000
    if record_ops and strategy != "standard":
        raise ValueError("operations are only recorded by the standard strategy")
    kern = _backend.backend(backend)
    low, R, T = kern.reduce_columns(
        np.ascontiguousarray(filtered.indptr, dtype=np.int64),
        np.ascontiguousarray(filtered.indices, dtype=np.int32),
        filtered.block_starts(), strategy == "twist", bool(record_ops),
    )
    return ReductionResult(np.asarray(low, dtype=np.int64), R, T, strategy)


def extract_barcode(red: ReductionResult, filtered: FilteredBoundaryMatrix) -> Barcode:
    """Finite bar per pair with distinct values, infinite bar per unpaired zero column."""
    vals = filtered.values
    deg = filtered.degrees.astype(np.int64) - filtered.index_shift
    cols = np.flatnonzero(red.low >= 0)
    rows = red.low[cols]
    keep = vals[rows] < vals[cols]
    bars = Counter()
    for d, b, e in zip(deg[rows[keep]].tolist(), vals[rows[keep]].tolist(), vals[cols[keep]].tolist()):
        bars[(d, b, e)] += 1
    for j in red.unpaired.tolist():
        bars[(int(deg[j]), float(vals[j]), INF)] += 1
    return Barcode(bars)


# ---------------------------------------------------------------------------
# bottleneck distance

def _finite_bottleneck(A, B) -> float:
    nA, nB = len(A), len(B)
    if nA == 0 and nB == 0:
        return 0.0
    A = np.asarray(A, dtype=float).reshape(-1, 2)
    B = np.asarray(B, dtype=float).reshape(-1, 2)
    pair = np.maximum(np.abs(A[:, None, 0] - B[None, :, 0]), np.abs(A[:, None, 1] - B[None, :, 1]))
    da = (A[:, 1] - A[:, 0]) / 2.0
    db = (B[:, 1] - B[:, 0]) / 2.0
    cands = np.unique(np.concatenate([pair.ravel(), da, db, [0.0]]))
    n = nA + nB

    def feasible(delta):
        # left: A bars then diagonal copies of B; right: B bars then diagonal copies of A
        rows, cols = [], []
        ia, jb = np.nonzero(pair <= delta)
        rows.append(ia); cols.append(jb)
        ok = np.flatnonzero(da <= delta)
        rows.append(ok); cols.append(nB + ok)
        ok = np.flatnonzero(db <= delta)
        rows.append(nA + ok); cols.append(ok)
        ii, jj = np.meshgrid(np.arange(nB), np.arange(nA), indexing="ij")
        rows.append(nA + ii.ravel()); cols.append(nB + jj.ravel())
        r = np.concatenate(rows); c = np.concatenate(cols)
        g = csr_matrix((np.ones(r.size, dtype=np.int8), (r, c)), shape=(n, n))
        match = maximum_bipartite_matching(g, perm_type="column")
        return bool(np.all(match >= 0))

    lo, hi = 0, cands.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(cands[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cands[lo])


def bottleneck(a: Barcode, b: Barcode) -> float:
    """Bottleneck distance; ``inf`` when infinite-bar counts differ in some degree."""
    result = 0.0
    for d in sorted(set(a.degrees()) | set(b.degrees())):
        ea, eb = a.expanded(d), b.expanded(d)
        ia = sorted(x for x, y in ea if y == INF)
        ib = sorted(x for x, y in eb if y == INF)
        if len(ia) != len(ib):
            return INF
        if ia:
            result = max(result, max(abs(x - y) for x, y in zip(ia, ib)))
        fa = [(x, y) for x, y in ea if y != INF]
        fb = [(x, y) for x, y in eb if y != INF]
        result = max(result, _finite_bottleneck(fa, fb))
    return result


# ---------------------------------------------------------------------------
# error budget

def _sampler_constants(gfqi: GfqiSpec):
    """``(C1, C2)`` from the radius ``R``, profile slope ``T`` and curvature ``T'``."""
    T = max(p.bounds.get("T", 0.0) for p in gfqi.pieces)
    T2 = max(p.bounds.get("T2", 0.0) for p in gfqi.pieces)
    R = gfqi.R
    if T2 >= 1.0:
        return INF, INF
    return 4.0 * R * T * T / (1.0 - T2), 2.0 * math.sqrt(2.0 * R) * T / (1.0 - T2)


def error_budget(gfqi: GfqiSpec, m: int, hj_errors=None, form: str = "certified") -> float:
    """Upper bound on the bottleneck distance between computed and exact barcodes.

    ``certified``: gradient bound times the two lattice displacements
    ``2 sqrt(2nN)/m`` plus the per-piece sampler errors ``hj_errors``
    (defaulting to each sample's own sup-error bound).

    ``radial``: ``C(R) sqrt(2n) r T N^2/m + C1 N/m + C2 N sqrt(E)`` with the
    profile constants ``T, T', r`` read off the samples.
    """
    n, N = gfqi.n, gfqi.N
    if form == "certified":
        if hj_errors is None:
            hj_errors = [p.sup_error for p in gfqi.pieces]
        lat = math.sqrt(2.0 * n * N) / m
        return gradient_bound(gfqi) * 2.0 * lat + float(sum(hj_errors))
    if form == "radial":
        T = max(p.bounds.get("T", 0.0) for p in gfqi.pieces)
        r = max(p.bounds.get("r", 0.0) for p in gfqi.pieces)
        E = max(p.inverse_tolerance for p in gfqi.pieces)
        c1, c2 = _sampler_constants(gfqi)
        main = c_of_r(gfqi.R) * math.sqrt(2.0 * n) * r * T * N * N / m
        return main + c1 * N / m + c2 * N * math.sqrt(E)
    raise ValueError(f"unknown error-budget form {form!r}")
