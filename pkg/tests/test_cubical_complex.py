import numpy as np
import pytest

from gfbarcode.cubical_complex import (ball_lattice, ball_lattice_count, build_base_pair, build_fiber_pair,
                                       full_complex, is_chain_complex, predicted_cell_count,
                                       product_boundaries)
from gfbarcode.errors import EmptyComplex, MeshMismatch
from gfbarcode.filtration import FilteredBoundaryMatrix, sublevel_betti


def homology(indptr, indices, degree):
    faces = [indices[indptr[j]:indptr[j + 1]].tolist() for j in range(len(degree))]
    fm = FilteredBoundaryMatrix.from_cells(degree, np.zeros(len(degree)), faces)
    return {k: v for k, v in sublevel_betti(fm, 1.0).items() if v}


def test_ball_lattice_order_and_count():
    pts = ball_lattice(1.5, 2)
    assert pts.shape[0] == ball_lattice_count(1.5, 2) == 9
    assert [tuple(p) for p in pts] == sorted(tuple(p) for p in pts)


def test_full_complex_counts_and_euler():
    cx = full_complex(1.0, 1, 2)
    assert cx.counts() == [21, 32, 12]
    assert 21 - 32 + 12 == 1
    assert is_chain_complex(cx.indptr, cx.indices, cx.size)


def test_base_quotient_is_sphere():
    b = build_base_pair(1.0, 1, 1)
    assert b.counts() == [6, 16, 12]
    assert homology(b.indptr, b.indices, b.degree) == {0: 1, 2: 1}


def test_base_quotient_is_sphere_finer_mesh():
    b = build_base_pair(1.3, 3, 1)
    assert homology(b.indptr, b.indices, b.degree) == {0: 1, 2: 1}


def test_fiber_relative_pair():
    f = build_fiber_pair(1.0, 1, 2, 1)
    assert int(f.in_Y0.sum()) == 2
    assert np.all(f.complex.degree[f.in_Y0] == 0)
    # (disc, two boundary points) has the homology of a circle relative a point
    assert homology(f.indptr, f.indices, f.degree) == {1: 1}


def test_fiber_requires_matching_index():
    with pytest.raises(MeshMismatch):
        build_fiber_pair(1.0, 1, 2, 2)


def test_empty_base_raises():
    with pytest.raises(EmptyComplex):
        build_base_pair(0.0, 1, 1)
    with pytest.raises(EmptyComplex):
        full_complex(1.0, 0, 2)


def test_product_counts_and_chain_complex():
    b = build_base_pair(1.0, 1, 1)
    f = build_fiber_pair(1.0, 1, 2, 1)
    p = product_boundaries(b, f)
    assert p.size == 2142
    assert p.degree_counts() == [114, 496, 812, 576, 144]
    assert np.bincount(p.degrees()).tolist() == p.degree_counts()
    assert p.check_chain_complex()
    assert homology(*p.boundary_of(np.arange(p.size)), p.degrees()) == {1: 1, 3: 1}


def test_product_degree_matrix_squares_to_zero():
    p = product_boundaries(build_base_pair(1.0, 1, 1), build_fiber_pair(1.0, 1, 2, 1))
    for j in range(2, p.top_degree + 1):
        d_hi, cols_hi, _ = p.degree_matrix(j)
        d_lo, _, _ = p.degree_matrix(j - 1)
        prod = (d_lo @ d_hi).toarray() % 2
        assert not prod.any()


def test_product_mesh_mismatch():
    with pytest.raises(MeshMismatch):
        product_boundaries(build_base_pair(1.0, 1, 1), build_fiber_pair(1.0, 2, 2, 1))


def test_write_triplets(tmp_path):
    p = product_boundaries(build_base_pair(1.0, 1, 1), build_fiber_pair(1.0, 1, 2, 1))
    path = tmp_path / "m.txt"
    p.write_triplets(path)
    lines = path.read_text().splitlines()
    assert len(lines) == sum(p.degree_matrix(j)[0].nnz for j in range(1, 5))
    j, r, c = map(int, lines[0].split())
    assert j == 1


def test_predicted_cell_count_scale():
    pred = predicted_cell_count(1.0, 1.0, 1, 1, 2)
    actual = product_boundaries(build_base_pair(1.0, 1, 1), build_fiber_pair(1.0, 1, 2, 1)).size
    assert actual <= pred <= 20 * actual
