import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_filtered
from gfbarcode import _backend, _kernels_py
from gfbarcode.cubical_complex import build_base_pair, build_fiber_pair, product_boundaries

compiled = pytest.mark.skipif(_backend.BACKEND != "compiled", reason="compiled kernels not built")


@compiled
def test_reduce_columns_matches_fallback():
    ck = _backend.backend("compiled")
    rng = np.random.default_rng(3)
    for _ in range(60):
        fm = random_filtered(rng)
        args = (fm.indptr, fm.indices, fm.block_starts())
        for clearing in (False, True):
            a = ck.reduce_columns(*args, clearing, False)[0]
            b = _kernels_py.reduce_columns(*args, clearing, False)[0]
            assert np.array_equal(a, b)
        a = ck.reduce_columns(*args, False, True)
        b = _kernels_py.reduce_columns(*args, False, True)
        for x, y in zip(a[1] + a[2], b[1] + b[2]):
            assert np.array_equal(x, y)


@compiled
def test_product_csc_matches_fallback():
    p = product_boundaries(build_base_pair(1.0, 1, 1), build_fiber_pair(1.0, 1, 2, 1))
    rng = np.random.default_rng(0)
    deg = p.degrees()
    order = np.lexsort((rng.random(p.size), deg)).astype(np.int64)
    pos = np.empty(p.size, dtype=np.int32)
    pos[order] = np.arange(p.size, dtype=np.int32)
    args = (order, pos, p.nF, p.base.indptr.astype(np.int64), p.base.indices.astype(np.int64),
            p.fiber.indptr.astype(np.int64), p.fiber.indices.astype(np.int64))
    a = _backend.backend("compiled").product_csc(*args)
    b = _kernels_py.product_csc(*args)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_backend_selection():
    assert _backend.backend("python") is _kernels_py
    with pytest.raises(ValueError):
        _backend.backend("gpu")


def test_env_forces_python_fallback():
    env = dict(os.environ, GFBARCODE_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "from gfbarcode import _backend; print(_backend.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
