import math

import numpy as np
import pytest

from conftest import T_CASE
from gfbarcode.cubical_complex import build_base_pair, build_fiber_pair, product_boundaries
from gfbarcode.errors import NonMonotone
from gfbarcode.filtration import (FilteredBoundaryMatrix, cell_values, filter_complex, sublevel_betti,
                                  vertex_values)
from gfbarcode.generating_functions import derive_radii, q_form
from gfbarcode.persistence import extract_barcode, reduce
from gfbarcode.radial_hamiltonians import RadialProfile, sample_generating_function


def tiny(kind, m=2):
    # tent pieces need m = 4 so that the bump centres are lattice points
    if kind == "zero":
        profiles = [RadialProfile.zero((0, 0), 0.125, T_CASE) for _ in range(2)]
        T, R = 0.5 * T_CASE, 0.5
    else:
        profiles = [RadialProfile.tent(0.05, 1 / 32, (0.25, 0)), RadialProfile.tent(0.05, 1 / 32, (-0.25, 0))]
        T, R = 0.25 * 0.05, 0.5
    g = derive_radii([sample_generating_function(p, m) for p in profiles], 1, 2, T, R)
    prod = product_boundaries(build_base_pair(g.Rb, m, 1), build_fiber_pair(g.Rf, m, 2, 1))
    return g, prod


@pytest.fixture(scope="module")
def tent_instance():
    g, prod = tiny("tent", 4)
    return g, prod, filter_complex(g, prod)


def test_max_rule_on_single_edge():
    fm = FilteredBoundaryMatrix.from_cells([0, 0, 1], [0.0, 5.0, 5.0], [[], [], [0, 1]])
    assert fm.values.tolist() == [0.0, 5.0, 5.0]
    with pytest.raises(NonMonotone):
        FilteredBoundaryMatrix.from_cells([0, 0, 1], [0.0, 5.0, 4.0], [[], [], [0, 1]])
    with pytest.raises(NonMonotone):
        FilteredBoundaryMatrix.from_cells([0, 1], [0.0, 1.0], [[], [0, 0, 0]]).check() or \
            FilteredBoundaryMatrix.from_cells([0, 2], [0.0, 1.0], [[], [0]])


def test_zero_pieces_value_is_fiber_max_of_q():
    g, prod = tiny("zero")
    vals = cell_values(g, prod)
    Y = prod.fiber.complex
    yv = Y.anchors[Y.vertex_cells]
    yrow = np.full(Y.size, -1)
    yrow[Y.vertex_cells] = np.arange(Y.vertex_cells.size)
    qv = q_form(yv, g.mesh)
    for f in range(prod.nF):
        k = int(prod.fiber.degree[f])
        corners = yrow[Y.corners(np.array([prod.fiber.cells[f]]))[0]]
        assert np.all(vals[:, f] == qv[corners].max())


def test_cell_value_is_max_over_corners(tent_instance):
    g, prod, _ = tent_instance
    vals = cell_values(g, prod)
    V = vertex_values(g, prod)
    X, Y = prod.base.complex, prod.fiber.complex
    xrow = np.full(X.size, -1); xrow[X.vertex_cells] = np.arange(X.vertex_cells.size)
    yrow = np.full(Y.size, -1); yrow[Y.vertex_cells] = np.arange(Y.vertex_cells.size)
    rng = np.random.default_rng(1)
    for cid in rng.choice(prod.size, 300, replace=False):
        b, f = divmod(int(cid), prod.nF)
        yc = yrow[Y.corners(np.array([prod.fiber.cells[f]]))[0]]
        if prod.base.cells[b] < 0:
            want = q_form(Y.anchors[Y.vertex_cells][yc], g.mesh).max()
        else:
            xc = xrow[X.corners(np.array([prod.base.cells[b]]))[0]]
            want = V[np.ix_(xc, yc)].max()
        assert vals[b, f] == want


def test_filtered_invariants(tent_instance):
    g, prod, fm = tent_instance
    fm.check()
    assert np.all(np.diff(fm.degrees) >= 0)
    starts = fm.block_starts()
    for lo, hi in zip(starts[:-1], starts[1:]):
        assert np.all(np.diff(fm.values[lo:hi]) >= 0)
    # the cubical fiber ball is padded by sqrt(d)/m so that it contains the round one
    assert fm.values.min() >= -(g.Rf + math.sqrt(2) / g.mesh) ** 2
    assert fm.values.max() > 0.0
    Y = prod.fiber.complex
    y0 = Y.anchors[prod.fiber.in_Y0 & (Y.degree == 0)]
    assert y0.shape[0] > 0 and np.all(q_form(y0, g.mesh) <= -g.Rf ** 2)
    assert fm.index_shift == 1


def test_ordering_is_deterministic_and_backend_independent(tent_instance):
    g, prod, fm = tent_instance
    other = filter_complex(g, prod, backend="python")
    assert np.array_equal(fm.cell_ids, other.cell_ids)
    assert np.array_equal(fm.indptr, other.indptr)
    assert np.array_equal(fm.indices, other.indices)


def test_sublevel_betti_extremes():
    g, prod = tiny("zero")
    fm = filter_complex(g, prod)
    assert all(v == 0 for v in sublevel_betti(fm, fm.values.min()).values())
    top = {k: v for k, v in sublevel_betti(fm, fm.values.max() + 1).items() if v}
    assert top == {0: 1, 2: 1}


def test_sublevel_betti_matches_barcode_at_random_thresholds(tent_instance):
    _, _, fm = tent_instance
    bc = extract_barcode(reduce(fm, "twist"), fm)
    rng = np.random.default_rng(5)
    ts = rng.choice(np.unique(fm.values), 10, replace=False)
    for t in ts:
        want = {}
        for (d, b, e), k in bc.bars.items():
            if b < t <= e:
                want[d] = want.get(d, 0) + k
        assert {d: r for d, r in sublevel_betti(fm, t).items() if r} == want


def test_dump_formats(tmp_path, tent_instance):
    _, _, fm = tent_instance
    small = FilteredBoundaryMatrix.from_cells([0, 0, 1, 1], [0, 1, 2, 3], [[], [], [0, 1], [0, 1]])
    small.write_dump(tmp_path / "o.txt", tmp_path / "m.txt")
    assert (tmp_path / "o.txt").read_text().splitlines()[2] == "1 2.0 2"
    assert (tmp_path / "m.txt").read_text().split("\n")[:4] == ["1 0 0", "1 1 0", "1 0 1", "1 1 1"]


def test_case_one_minimum_is_vertex_minimum(case_runs):
    run = case_runs["I"]
    assert run["min_cell"] == run["min_vertex"]
