import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import T_CASE
from gfbarcode.errors import InvalidBounds, MeshMismatch
from gfbarcode.generating_functions import (as_lattice, c_of_r, cutoff, derive_radii, eval_gfqi,
                                            eval_s_prime, gradient_bound, q_form, radii_formulas)
from gfbarcode.radial_hamiltonians import RadialProfile, sample_generating_function


def case(a=0.75, m=16):
    profiles = [RadialProfile.tent(T_CASE, 0.5, (a, 0.0)), RadialProfile.tent(T_CASE, 0.5, (-a, 0.0))]
    return derive_radii([sample_generating_function(p, m) for p in profiles], 1, 2, T_CASE, 1.0 + a)


@pytest.fixture(scope="module")
def g16():
    return case()


def test_radii_arithmetic_oracle():
    r = radii_formulas(1, 2, 1.0, 1.0, [0.0, 0.0])
    s2 = math.sqrt(2)
    assert r["M"] == pytest.approx(2 * s2, abs=1e-12)
    assert r["C0"] == 2.0
    assert r["Rf_minus"] == pytest.approx(s2 / 2 + 2 * s2, abs=1e-12)
    assert r["Rf_plus"] == pytest.approx(s2 / 2 + 4 * s2, abs=1e-12)
    assert r["Rf"] == r["Rf_plus"]
    assert r["Rb"] == pytest.approx(s2 * 2 + 2 * r["Rf_plus"], abs=1e-12)


def test_negative_minima_enlarge_fiber_radius():
    r = radii_formulas(1, 3, 0.1, 1.0, [-0.01, 0.0, -0.02])
    assert r["Rf"] == pytest.approx(math.sqrt(r["Rf_plus"] ** 2 + 0.03))


def test_spec_constants_match_formulas(g16):
    r = radii_formulas(1, 2, T_CASE, 1.75, g16.min_Sj)
    for k, v in r.items():
        assert getattr(g16, k) == pytest.approx(v, rel=1e-12)
    assert g16.fiber_dim == 2 and g16.quad_index == 1


def test_derive_radii_validation():
    s8 = sample_generating_function(RadialProfile.tent(T_CASE, 0.5, (0.5, 0)), 8)
    s16 = sample_generating_function(RadialProfile.tent(T_CASE, 0.5, (0.5, 0)), 16)
    with pytest.raises(MeshMismatch):
        derive_radii([s8, s16], 1, 2, T_CASE, 1.5)
    with pytest.raises(InvalidBounds):
        derive_radii([s8], 1, 1, T_CASE, 1.5)
    with pytest.raises(InvalidBounds):
        derive_radii([s8, s8], 1, 2, 0.0, 1.5)
    with pytest.raises(MeshMismatch):
        derive_radii([s8, s8], 2, 2, T_CASE, 1.5)


def test_as_lattice():
    assert as_lattice([0.25, -0.5], 4).tolist() == [1, -2]
    with pytest.raises(MeshMismatch):
        as_lattice([0.3, 0.0], 4)


def test_q_form():
    assert q_form(np.array([2, 3]), 1) == 5.0
    assert q_form(np.array([4, 0]), 2) == -4.0


def test_composition_matches_piece_lookups(g16):
    rng = np.random.default_rng(3)
    base = rng.integers(-30, 31, size=(300, 2))
    fib = rng.integers(-20, 21, size=(300, 2))
    s1, s2 = g16.pieces
    q, p = base[:, :1], base[:, 1:]
    xm, xp = fib[:, :1], fib[:, 1:]
    want = (s1.lookup(np.concatenate([q + xm - xp, p], 1)) + s2.lookup(np.concatenate([q, p + xm + xp], 1))
            + q_form(fib, 16))
    assert np.allclose(eval_s_prime(g16, base, fib), want, rtol=0, atol=1e-15)


def test_identity_pieces_give_pure_quadratic():
    z = [sample_generating_function(RadialProfile.zero((0, 0), 0.125, 1e-3), 4) for _ in range(3)]
    g = derive_radii(z, 1, 3, 5e-4, 0.5)
    rng = np.random.default_rng(0)
    base = rng.integers(-8, 9, size=(50, 2))
    fib = rng.integers(-8, 9, size=(50, 4))
    assert np.array_equal(eval_gfqi(g, base, fib), q_form(fib, 4))


def test_cutoff_shape(g16):
    assert cutoff(g16, 0.0) == 1.0
    assert cutoff(g16, g16.Rf_minus) == pytest.approx(1.0)
    assert cutoff(g16, g16.Rf_plus) == 0.0
    assert cutoff(g16, 0.5 * (g16.Rf_minus + g16.Rf_plus)) == pytest.approx(0.5)


@settings(max_examples=200, deadline=None)
@given(st.integers(-80, 80), st.integers(-80, 80), st.integers(-25, 25), st.integers(-25, 25))
def test_gfqi_equals_sprime_inside_and_q_outside(g16, b0, b1, f0, f1):
    base, fib = np.array([b0, b1]), np.array([f0, f1])
    r = math.hypot(f0, f1) / 16
    v = eval_gfqi(g16, base, fib)
    if r <= g16.Rf_minus and math.hypot(b0, b1) / 16 < g16.Rb:
        assert v == eval_s_prime(g16, base, fib)
    if r >= g16.Rf_plus or math.hypot(b0, b1) / 16 >= g16.Rb:
        assert v == q_form(fib, 16)


def test_gradient_bound():
    assert c_of_r(0.0) == pytest.approx(math.sqrt(3) + 2 ** 0.75 * math.sqrt(5))
    g = case(m=8)
    assert gradient_bound(g) == pytest.approx(c_of_r(1.75) * T_CASE * 2 ** 1.5)


def _shell_margins(g, m, base):
    r = np.arange(-int(g.Rf_plus * m) - 1, int(g.Rf_plus * m) + 2)
    xi = np.array(list(itertools.product(r, r)))
    rad = np.hypot(xi[:, 0], xi[:, 1]) / m
    shell = xi[(rad >= g.Rf_minus) & (rad <= g.Rf_plus)]
    e = np.eye(2, dtype=np.int64)
    grad = np.stack([(eval_gfqi(g, base[:, None], shell[None] + e[i])
                      - eval_gfqi(g, base[:, None], shell[None] - e[i])) * m / 2 for i in range(2)], axis=-1)
    norm = np.linalg.norm(grad, axis=-1)
    r_xi = np.linalg.norm(shell, axis=-1) / m
    slack = 2 * gradient_bound(g) / m
    with_cutoff = 2 * r_xi - (g.C0 + g.M * r_xi) / g.M - g.M - slack
    bare = 2 * r_xi - g.M - slack
    return float((norm - with_cutoff).min()), float((norm - bare).min())


def test_no_fiber_critical_points_in_shell(g16):
    rb = np.arange(-int(g16.Rb * 16), int(g16.Rb * 16) + 1)
    base = np.array(list(itertools.product(rb, rb)))
    cutoff_margin, _ = _shell_margins(g16, 16, base)
    assert cutoff_margin >= 0.0


@pytest.mark.xfail(strict=True, reason="the bare threshold 2|xi| - M - 2l/m omits the cutoff-slope term "
                                        "eps (C0 + M|xi|); the exact GFQI violates it where rho' and S'-Q are both nonzero")
def test_shell_gradient_bare_threshold():
    g = case(0.75, 64)
    base = np.array([(-43 + i, 35 + j) for i in range(-2, 3) for j in range(-2, 3)])
    _, bare_margin = _shell_margins(g, 64, base)
    assert bare_margin >= 0.0
