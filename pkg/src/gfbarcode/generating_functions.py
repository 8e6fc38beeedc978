"""Composition of sampled generating functions into a function quadratic at infinity.

Coordinates are integer lattice indices (units of ``1/m``) throughout. The
base point is ``(q_N, p_0)`` and the fiber is
``xi = (xi^-_1 .. xi^-_{N-1}, xi^+_1 .. xi^+_{N-1})``, each block of size ``n``.
The change of variables maps lattice points to lattice points, so piece
lookups are exact integer-key lookups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidBounds, MeshMismatch


@dataclass
class GfqiSpec:
    pieces: list
    n: int
    N: int
    T: float
    R: float
    mesh: int
    M: float
    C0: float
    Rf_minus: float
    Rf_plus: float
    Rf: float
    Rb: float
    min_Sj: list

    @property
    def fiber_dim(self) -> int:
        return 2 * self.n * (self.N - 1)

    @property
    def quad_index(self) -> int:
        return self.n * (self.N - 1)

    def constants(self) -> dict:
        return {
            "n": self.n, "N": self.N, "T": self.T, "R": self.R, "mesh": self.mesh,
            "M": self.M, "C0": self.C0, "Rf_minus": self.Rf_minus,
            "Rf_plus": self.Rf_plus, "Rf": self.Rf, "Rb": self.Rb,
            "fiber_dim": self.fiber_dim, "quad_index": self.quad_index,
            "min_Sj": list(self.min_Sj),
        }


def radii_formulas(n, N, T, R, min_Sj):
    """All derived radii as a dict; shared by construction and audits."""
    M = math.sqrt(2.0) * T * ((N - 1) + sum(math.sqrt(j) for j in range(1, N)))
    C0 = N * T * R
    Rf_minus = C0 / M + M
    Rf_plus = C0 / M + 2.0 * M
    Rf = math.sqrt(Rf_plus ** 2 - sum(min_Sj))
    Rb = math.sqrt(2.0 * n) * (R + T) + 2.0 * math.sqrt(n * (N - 1)) * Rf_plus
    return {"M": M, "C0": C0, "Rf_minus": Rf_minus, "Rf_plus": Rf_plus, "Rf": Rf, "Rb": Rb}


def derive_radii(pieces, n: int, N: int, T: float, R: float) -> GfqiSpec:
    """Bundle ``N`` samples into a GFQI description with its certified radii."""
    if N < 2:
        raise InvalidBounds("at least two pieces are required")
    if not T > 0 or not R > 0:
        raise InvalidBounds("T and R must be positive")
    if len(pieces) != N:
        raise InvalidBounds(f"expected {N} pieces, got {len(pieces)}")
    meshes = {p.mesh for p in pieces}
    if len(meshes) != 1:
        raise MeshMismatch(f"pieces sampled on different meshes {sorted(meshes)}")
    for p in pieces:
        if p.dim != 2 * n:
            raise MeshMismatch(f"piece of dimension {p.dim} in a base of dimension {2 * n}")
    min_Sj = [p.min_value for p in pieces]
    r = radii_formulas(n, N, T, R, min_Sj)
    if r["Rf"] < r["Rf_plus"]:
        raise InvalidBounds("fiber radius smaller than the cutoff radius")
    return GfqiSpec(pieces=list(pieces), n=n, N=N, T=T, R=R, mesh=meshes.pop(),
                    min_Sj=min_Sj, **r)


def as_lattice(x, m: int) -> np.ndarray:
    """Integer lattice indices of points given in real or integer coordinates."""
    x = np.asarray(x)
    if np.issubdtype(x.dtype, np.integer):
        return x.astype(np.int64)
    k = np.rint(x * m)
    if np.any(np.abs(k - x * m) > 1e-9):
        raise MeshMismatch(f"point is not on the lattice (1/{m})Z")
    return k.astype(np.int64)


def q_form(fiber, m: int = 1) -> np.ndarray:
    """``-|xi^-|^2 + |xi^+|^2`` for integer fiber coordinates at mesh ``m``."""
    fiber = np.asarray(fiber)
    h = fiber.shape[-1] // 2
    f = fiber.astype(float)
    return (np.sum(f[..., h:] ** 2, axis=-1) - np.sum(f[..., :h] ** 2, axis=-1)) / (m * m)


def _composed_arguments(n, N, base, fiber):
    """Integer arguments ``(q~_j, p~_{j-1})`` of every piece."""
    q = base[..., :n]
    p = base[..., n:]
    K = N - 1
    xm = fiber[..., : n * K].reshape(fiber.shape[:-1] + (K, n))
    xp = fiber[..., n * K:].reshape(fiber.shape[:-1] + (K, n))
    diff = xm - xp
    # tails[j] = sum_{k >= j} (xi^-_k - xi^+_k), j = 1..N with the xi_N term zero
    tails = np.flip(np.cumsum(np.flip(diff, axis=-2), axis=-2), axis=-2)
    args = []
    for j in range(1, N + 1):
        qj = q + tails[..., j - 1, :] if j <= K else q
        pj = p if j == 1 else p + xm[..., j - 2, :] + xp[..., j - 2, :]
        args.append(np.concatenate([qj, pj], axis=-1))
    return args


def _check_coords(spec, base, fiber):
    base = as_lattice(base, spec.mesh)
    fiber = as_lattice(fiber, spec.mesh)
    if base.shape[-1] != 2 * spec.n or fiber.shape[-1] != spec.fiber_dim:
        raise MeshMismatch("base or fiber coordinates have the wrong dimension")
    lead = np.broadcast_shapes(base.shape[:-1], fiber.shape[:-1])
    return (np.broadcast_to(base, lead + base.shape[-1:]),
            np.broadcast_to(fiber, lead + fiber.shape[-1:]))


def eval_s_prime(spec: GfqiSpec, base, fiber) -> np.ndarray:
    """Composed function ``sum_j S_j(q~_j, p~_{j-1}) + Q(xi)`` (broadcasting)."""
    base, fiber = _check_coords(spec, base, fiber)
    total = q_form(fiber, spec.mesh)
    for piece, arg in zip(spec.pieces, _composed_arguments(spec.n, spec.N, base, fiber)):
        total = total + piece.lookup(arg)
    return total


def cutoff(spec: GfqiSpec, r) -> np.ndarray:
    """Piecewise-linear ``rho``: 1 up to ``Rf-``, 0 from ``Rf+``, linear between."""
    r = np.asarray(r, dtype=float)
    return np.clip((spec.Rf_plus - r) / spec.M, 0.0, 1.0)


def eval_gfqi(spec: GfqiSpec, base, fiber) -> np.ndarray:
    """``rho(|xi|) S' + (1 - rho(|xi|)) Q(xi)``; exactly ``Q`` far out in base or fiber."""
    base, fiber = _check_coords(spec, base, fiber)
    m = spec.mesh
    qv = q_form(fiber, m)
    rxi = np.sqrt(np.sum(fiber.astype(float) ** 2, axis=-1)) / m
    rb = np.sqrt(np.sum(base.astype(float) ** 2, axis=-1)) / m
    rho = cutoff(spec, rxi)
    sp = eval_s_prime(spec, base, fiber)
    val = rho * sp + (1.0 - rho) * qv
    val = np.where(rho >= 1.0, sp, val)
    return np.where((rxi >= spec.Rf_plus) | (rb >= spec.Rb), qv, val)


def c_of_r(R: float) -> float:
    return R / 2.0 + math.sqrt(3.0) + 2.0 ** 0.75 * math.sqrt(5.0 + (1.0 + math.sqrt(2.0)) * R)


def gradient_bound(spec: GfqiSpec) -> float:
    """Bound ``C(R) T N^{3/2}`` on the gradient of the composed function."""
    return c_of_r(spec.R) * spec.T * spec.N ** 1.5
