import itertools
import math
import os

import numpy as np
import pytest

from gfbarcode.filtration import FilteredBoundaryMatrix

T_CASE = 2 * math.pi * 1e-4
ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIGS = os.path.join(ROOT, "configs")
DATA = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    k = mark.args[0]
    detail = "; ".join(f"{n}={v}" for n, v in item.user_properties)
    ok = call.excinfo is None
    prev = _CRITERIA.get(k)
    if prev is not None:
        ok = ok and prev[0]
        detail = prev[1] + (" | " + detail if detail else "")
    _CRITERIA[k] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        ok, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


# ---------------------------------------------------------------------------
# random monotone filtered complexes

def random_complex(rng, max_cells=50, max_dim=3, integer_values=None):
    """Closure of random simplices, values made monotone; returns (degrees, values, faces)."""
    nv = int(rng.integers(3, 7))
    simplices = set()
    while True:
        k = int(rng.integers(1, max_dim + 1))
        k = min(k, nv - 1)
        top = tuple(sorted(rng.choice(nv, size=k + 1, replace=False).tolist()))
        closure = {c for r in range(1, len(top) + 1) for c in itertools.combinations(top, r)}
        if len(simplices | closure) > max_cells:
            break
        simplices |= closure
        if rng.random() < 0.15:
            break
    cells = sorted(simplices, key=lambda s: (len(s), s))
    index = {c: i for i, c in enumerate(cells)}
    degrees = [len(c) - 1 for c in cells]
    faces = [[index[f] for f in itertools.combinations(c, len(c) - 1)] if len(c) > 1 else []
             for c in cells]
    if integer_values is None:
        integer_values = rng.random() < 0.5
    raw = rng.integers(0, 6, len(cells)).astype(float) if integer_values else rng.random(len(cells))
    values = np.zeros(len(cells))
    for i in range(len(cells)):
        values[i] = max([raw[i]] + [values[f] for f in faces[i]])
    return degrees, values, faces


def random_filtered(rng, **kw):
    d, v, f = random_complex(rng, **kw)
    return FilteredBoundaryMatrix.from_cells(d, v, f)


@pytest.fixture
def corpus():
    rng = np.random.default_rng(20240601)
    return [random_filtered(rng) for _ in range(120)]


def circle():
    """Vertices a@0, b@1; edges e1@2, e2@3, each bounded by a + b."""
    return FilteredBoundaryMatrix.from_cells([0, 0, 1, 1], [0, 1, 2, 3], [[], [], [0, 1], [0, 1]])


# ---------------------------------------------------------------------------
# the two-tent cases at the largest feasible mesh, computed once per session

M_STAR = 8


def _case_run(a, m):
    import time

    from gfbarcode.cubical_complex import build_base_pair, build_fiber_pair, product_boundaries
    from gfbarcode.filtration import filter_complex, vertex_values
    from gfbarcode.generating_functions import derive_radii
    from gfbarcode.persistence import error_budget, extract_barcode, reduce
    from gfbarcode.radial_hamiltonians import RadialProfile, sample_generating_function

    t0 = time.perf_counter()
    profiles = [RadialProfile.tent(T_CASE, 0.5, (a, 0.0)), RadialProfile.tent(T_CASE, 0.5, (-a, 0.0))]
    pieces = [sample_generating_function(p, m) for p in profiles]
    gfqi = derive_radii(pieces, 1, 2, T_CASE, 1.0 + a)
    base = build_base_pair(gfqi.Rb, m, 1)
    fiber = build_fiber_pair(gfqi.Rf, m, 2, 1)
    prod = product_boundaries(base, fiber)
    filtered = filter_complex(gfqi, prod)
    V = vertex_values(gfqi, prod)
    yv_rel = ~fiber.in_Y0[fiber.complex.vertex_cells]
    out = {
        "gfqi": gfqi,
        "cells": prod.size,
        "min_cell": float(filtered.values.min()),
        "min_vertex": float(V[:, yv_rel].min()),
        "max_cell": float(filtered.values.max()),
    }
    del V
    red = reduce(filtered, "twist")
    out["barcode"] = extract_barcode(red, filtered)
    out["budget"] = error_budget(gfqi, m)
    out["budget_radial"] = error_budget(gfqi, m, form="radial")
    out["seconds"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def case_runs():
    return {"I": _case_run(0.75, M_STAR), "II": _case_run(0.70, M_STAR)}
