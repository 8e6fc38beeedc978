"""Radial Hamiltonians on the plane, their flows, and sampled generating functions.

A radial profile ``h`` on ``s = |x - c|^2 / 2`` defines ``H(x) = h(s)``. Its
flow rotates ``x`` about ``c`` by the angle ``h'(s) t``, so everything here is
explicit except the inverse problem ``Q^t(q, p) = Q``, which is solved by a
safeguarded Newton iteration.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidBounds, NoConvergence

INVERSE_MAX_ITER = 100


@dataclass(frozen=True)
class RadialProfile:
    """C^1 piecewise-cubic profile ``h`` supported on ``[0, r]``.

    ``coeffs[i]`` holds ``(a0, a1, a2, a3)`` with
    ``h(s) = a0 + a1 u + a2 u^2 + a3 u^3`` and ``u = s - knots[i]`` on
    ``[knots[i], knots[i + 1]]``.
    """

    knots: np.ndarray
    coeffs: np.ndarray
    center: np.ndarray
    deriv_bound: float
    second_deriv_bound: float

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1, 4)
        center = np.asarray(self.center, dtype=float).reshape(2)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "center", center)
        if knots.ndim != 1 or knots.size < 2 or knots[0] != 0.0:
            raise InvalidBounds("profile knots must start at 0 and have at least two entries")
        if np.any(np.diff(knots) <= 0):
            raise InvalidBounds("profile knots must be strictly increasing")
        if coeffs.shape[0] != knots.size - 1:
            raise InvalidBounds("one coefficient row per knot interval is required")
        if self.deriv_bound < 0 or self.second_deriv_bound < 0:
            raise InvalidBounds("derivative bounds must be non-negative")

    # construction -----------------------------------------------------

    @classmethod
    def from_derivative(cls, knots, slopes, center, deriv_bound=None, second_deriv_bound=None):
        """Profile whose ``h'`` interpolates ``slopes`` linearly between ``knots``.

        The last slope must be 0 so that ``h'`` is continuous at the support
        edge; ``h`` is integrated backwards from ``h(r) = 0``.
        """
        knots = np.asarray(knots, dtype=float)
        d = np.asarray(slopes, dtype=float)
        if d.shape != knots.shape:
            raise InvalidBounds("knots and slopes differ in length")
        if d[-1] != 0.0:
            raise InvalidBounds("h' must vanish at the support edge")
        w = np.diff(knots)
        curv = np.diff(d) / w
        coeffs = np.zeros((w.size, 4))
        coeffs[:, 1] = d[:-1]
        coeffs[:, 2] = curv / 2.0
        h_right = 0.0
        for i in range(w.size - 1, -1, -1):
            h_left = h_right - (d[i] * w[i] + curv[i] * w[i] ** 2 / 2.0)
            coeffs[i, 0] = h_left
            h_right = h_left
        if deriv_bound is None:
            deriv_bound = float(np.max(np.abs(d)))
        if second_deriv_bound is None:
            second_deriv_bound = float(np.max(np.abs(curv))) if curv.size else 0.0
        return cls(knots, coeffs, center, float(deriv_bound), float(second_deriv_bound))

    @classmethod
    def tent(cls, T, support=0.5, center=(0.0, 0.0), peak=None):
        """``h' = -T * tent`` on ``[0, support]``, peaking at ``peak``.

        ``h`` decreases from ``h(0) = T * support / 2`` to 0, so ``c`` is the
        maximum of ``H``.
        """
        if T <= 0:
            raise InvalidBounds("tent height T must be positive")
        peak = support / 2.0 if peak is None else float(peak)
        if not 0.0 < peak < support:
            raise InvalidBounds("tent peak must lie strictly inside the support")
        return cls.from_derivative([0.0, peak, support], [0.0, -T, 0.0], center)

    @classmethod
    def zero(cls, center=(0.0, 0.0), support=0.5, deriv_bound=0.0, second_deriv_bound=0.0):
        """Identically zero profile carrying declared (possibly loose) bounds."""
        return cls(np.array([0.0, support]), np.zeros((1, 4)), center,
                   float(deriv_bound), float(second_deriv_bound))

    # evaluation -------------------------------------------------------

    @property
    def support_param(self) -> float:
        return float(self.knots[-1])

    @property
    def support_radius(self) -> float:
        """Radius of the disc about ``c`` outside which the flow is the identity."""
        return math.sqrt(2.0 * self.support_param)

    def _locate(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(self.knots, s, side="right") - 1, 0, self.coeffs.shape[0] - 1)
        return s, idx, s - self.knots[idx], s >= self.support_param

    def h(self, s):
        s, i, u, out = self._locate(s)
        a = self.coeffs[i]
        val = a[..., 0] + u * (a[..., 1] + u * (a[..., 2] + u * a[..., 3]))
        return np.where(out, 0.0, val)

    def dh(self, s):
        s, i, u, out = self._locate(s)
        a = self.coeffs[i]
        val = a[..., 1] + u * (2.0 * a[..., 2] + 3.0 * u * a[..., 3])
        return np.where(out, 0.0, val)

    def d2h(self, s):
        s, i, u, out = self._locate(s)
        a = self.coeffs[i]
        val = 2.0 * a[..., 2] + 6.0 * u * a[..., 3]
        return np.where(out, 0.0, val)

    def hamiltonian(self, x):
        x = np.asarray(x, dtype=float)
        u = x - self.center
        return self.h(0.5 * np.sum(u * u, axis=-1))

    def check(self, samples: int = 20001, rtol: float = 1e-12) -> None:
        """Verify C^1 continuity at the knots and the declared bounds on a dense grid."""
        scale = max(self.deriv_bound, float(np.max(np.abs(self.coeffs))), 1e-300)
        for i in range(1, self.knots.size):
            u = self.knots[i] - self.knots[i - 1]
            a = self.coeffs[i - 1]
            left_h = a[0] + u * (a[1] + u * (a[2] + u * a[3]))
            left_dh = a[1] + u * (2 * a[2] + 3 * u * a[3])
            if i < self.knots.size - 1:
                right_h, right_dh = self.coeffs[i, 0], self.coeffs[i, 1]
            else:
                right_h = right_dh = 0.0
            if abs(left_h - right_h) > rtol * scale or abs(left_dh - right_dh) > rtol * scale:
                raise InvalidBounds(f"profile is not C^1 at knot {self.knots[i]}")
        s = np.linspace(0.0, self.support_param, samples)
        slack = 1.0 + rtol
        if np.max(np.abs(self.dh(s))) > self.deriv_bound * slack + 1e-300:
            raise InvalidBounds("sup|h'| exceeds the declared bound T")
        if np.max(np.abs(self.d2h(s))) > self.second_deriv_bound * slack + 1e-300:
            raise InvalidBounds("sup|h''| exceeds the declared bound T'")


def c0_c1_bounds(profile: RadialProfile) -> tuple[float, float]:
    """Bounds on ``|phi - Id|`` and ``|D phi - Id|`` for the time-one flow."""
    w = profile.support_radius
    c = float(np.hypot(*profile.center))
    return w * profile.deriv_bound, w * (c + w) * profile.second_deriv_bound + profile.deriv_bound


def _flow_parts(profile, t, q, p):
    ux = q - profile.center[0]
    uy = p - profile.center[1]
    s = 0.5 * (ux * ux + uy * uy)
    theta = t * profile.dh(s)
    return ux, uy, s, theta, np.cos(theta), np.sin(theta)


def _flow_qp(profile, t, q, p):
    ux, uy, s, _, cs, sn = _flow_parts(profile, t, q, p)
    out = s >= profile.support_param
    Q = np.where(out, q, profile.center[0] + cs * ux - sn * uy)
    P = np.where(out, p, profile.center[1] + sn * ux + cs * uy)
    return Q, P


def eval_flow(profile: RadialProfile, t: float, x) -> np.ndarray:
    """Time-``t`` flow of ``H``: rotation about ``c`` by ``h'(s) t``.

    Points outside the support are returned unchanged, bit for bit.
    """
    x = np.asarray(x, dtype=float)
    Q, P = _flow_qp(profile, t, x[..., 0], x[..., 1])
    return np.stack([Q, P], axis=-1)


def _residual(profile, t, x, p, Q):
    ux, uy, s, _, cs, sn = _flow_parts(profile, t, x, p)
    out = s >= profile.support_param
    Qt = np.where(out, x, profile.center[0] + cs * ux - sn * uy)
    dtheta = t * profile.d2h(s) * ux
    dQ = np.where(out, 1.0, cs - (sn * ux + cs * uy) * dtheta)
    return Qt - Q, dQ


def _inverse_q(profile, t, Q, p, E, max_iter=INVERSE_MAX_ITER):
    """Vectorized inverse of ``q -> Q^t(q, p)``; returns ``(q, residual)``."""
    Q = np.asarray(Q, dtype=float)
    p = np.asarray(p, dtype=float)
    tol = math.sqrt(E)
    radius = c0_c1_bounds(profile)[0] * abs(t)
    radius = radius * (1.0 + 1e-9) + 1e-15
    lo, hi = Q - radius, Q + radius
    x = Q.copy()
    g, dg = _residual(profile, t, x, p, Q)
    it = 0
    while it < max_iter:
        bad = np.abs(g) > tol
        if not bad.any():
            break
        lo = np.where(bad & (g < 0), x, lo)
        hi = np.where(bad & (g > 0), x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - g / dg
        ok = (dg > 0) & (step > lo) & (step < hi)
        x = np.where(bad, np.where(ok, step, 0.5 * (lo + hi)), x)
        g, dg = _residual(profile, t, x, p, Q)
        it += 1
    # Two plain Newton polish steps; kept only where they improve the residual.
    for _ in range(2):
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - g / dg
        step = np.where(np.isfinite(step), np.clip(step, Q - radius, Q + radius), x)
        g2, dg2 = _residual(profile, t, step, p, Q)
        better = np.abs(g2) < np.abs(g)
        x = np.where(better, step, x)
        g = np.where(better, g2, g)
        dg = np.where(better, dg2, dg)
    return x, g


def solve_inverse_q(profile: RadialProfile, t: float, target, tol: float) -> float:
    """Solve ``Q^t(q, p) = Q`` for ``q`` with ``|Q^t(q, p) - Q| <= sqrt(tol)``.

    ``target`` is the pair ``(Q, p)``. The search stays in the interval of
    radius ``t * c0_bound`` around ``Q``.
    """
    if tol <= 0:
        raise InvalidBounds("inverse tolerance E must be positive")
    if c0_c1_bounds(profile)[1] >= 1.0:
        raise InvalidBounds("C^1 bound must be < 1 for the inverse problem")
    Q, p = float(target[0]), float(target[1])
    x, g = _inverse_q(profile, t, np.array([Q]), np.array([p]), tol)
    if not abs(g[0]) <= math.sqrt(tol):
        raise NoConvergence(f"residual {abs(g[0]):.3e} > sqrt(E) at (Q, p) = ({Q}, {p})", (Q, p))
    return float(x[0])


@dataclass
class GenFunSample:
    """Generating function sampled on ``(1/m) Z^{2n}``, zero off the stored set.

    Values live in a dense array ``grid`` whose entry ``grid[k]`` is the value
    at lattice point ``origin + k`` (integer units of ``1/m``).
    """

    mesh: int
    origin: np.ndarray
    grid: np.ndarray
    mask: np.ndarray
    support_radius: float
    inverse_tolerance: float
    center: np.ndarray
    bounds: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.grid.ndim

    def error_constants(self) -> tuple[float, float]:
        """``(C1, C2)`` with ``sup_error = C1 / m + C2 sqrt(E)``."""
        b = self.bounds
        if not b:
            return 0.0, 0.0
        G = b["T"] * math.sqrt(2.0 * b["r"])
        denom = 1.0 - b["c1"]
        return 2.0 * G * G / denom, 2.0 * G / denom

    @property
    def sup_error(self) -> float:
        c1, c2 = self.error_constants()
        return c1 / self.mesh + c2 * math.sqrt(self.inverse_tolerance)

    @property
    def min_value(self) -> float:
        # lookups outside the stored set return 0, so 0 is always attained
        stored = self.grid[self.mask]
        return min(0.0, float(stored.min())) if stored.size else 0.0

    def lookup(self, coords) -> np.ndarray:
        """Values at integer lattice coordinates of shape ``(..., 2n)``."""
        coords = np.asarray(coords)
        k = coords - self.origin
        inside = np.all((k >= 0) & (k < np.array(self.grid.shape)), axis=-1)
        kc = np.where(inside[..., None], k, 0)
        vals = self.grid[tuple(np.moveaxis(kc, -1, 0))]
        return np.where(inside, vals, 0.0)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Stored lattice points (integer coordinates) and their values."""
        idx = np.argwhere(self.mask)
        return idx + self.origin, self.grid[self.mask]


def _lattice_disc(center, radius, m):
    lo = np.floor((center - radius) * m).astype(np.int64) - 1
    hi = np.ceil((center + radius) * m).astype(np.int64) + 1
    ii, jj = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1), indexing="ij")
    dx = ii / m - center[0]
    dy = jj / m - center[1]
    mask = dx * dx + dy * dy <= radius * radius
    return lo, ii, jj, mask


def _sample_chunk(profile, m, E, Q, p):
    acc = np.zeros_like(Q)
    tol = math.sqrt(E)
    for k in range(1, m + 1):
        t = k / m
        q, g = _inverse_q(profile, t, Q, p, E)
        failed = ~(np.abs(g) <= tol)
        if failed.any():
            i = int(np.argmax(failed))
            raise NoConvergence(
                f"inverse solve at t={t} left residual {abs(g[i]):.3e} > sqrt(E)={tol:.3e}",
                (float(Q[i]), float(p[i])),
            )
        _, P = _flow_qp(profile, t, q, p)
        u = Q - profile.center[0]
        v = P - profile.center[1]
        acc += profile.h(0.5 * (u * u + v * v))
    return acc / m


def sample_generating_function(profile: RadialProfile, m: int, E: float | None = None,
                               threads: int = 1) -> GenFunSample:
    """Quadrature sample of the time-one generating function on ``(1/m) Z^2``."""
    if m < 1:
        raise InvalidBounds("mesh m must be >= 1")
    E = (1.0 / m) ** 4 if E is None else float(E)
    if E <= 0:
        raise InvalidBounds("inverse tolerance E must be positive")
    _, c1 = c0_c1_bounds(profile)
    if not c1 < 0.5:
        raise InvalidBounds(f"C^1 bound {c1:.4g} is not below 1/2; no generating function")
    radius = profile.support_radius + math.sqrt(2.0) / m
    lo, ii, jj, mask = _lattice_disc(profile.center, radius, m)
    Q = ii[mask] / m
    p = jj[mask] / m
    values = np.zeros(Q.shape)
    if np.any(profile.coeffs != 0) and Q.size:
        threads = max(1, int(threads))
        chunks = np.array_split(np.arange(Q.size), threads)
        if threads == 1:
            values = _sample_chunk(profile, m, E, Q, p)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(lambda c: _sample_chunk(profile, m, E, Q[c], p[c]), chunks))
            for c, part in zip(chunks, parts):
                values[c] = part
    grid = np.zeros(ii.shape)
    grid[mask] = values
    bounds = {
        "T": profile.deriv_bound,
        "T2": profile.second_deriv_bound,
        "r": profile.support_param,
        "c1": c1,
        "R": float(np.hypot(*profile.center)) + profile.support_radius,
    }
    return GenFunSample(
        mesh=m,
        origin=lo,
        grid=grid,
        mask=mask,
        support_radius=profile.support_radius,
        inverse_tolerance=E,
        center=profile.center.copy(),
        bounds=bounds,
    )


def flow_gradient_oracle(profile: RadialProfile, Q, p, tol: float = 1e-28):
    """Exact ``grad S = (P - p, q - Q)`` at ``(Q, p)`` from the time-one flow."""
    Q = np.asarray(Q, dtype=float)
    p = np.asarray(p, dtype=float)
    q, _ = _inverse_q(profile, 1.0, Q, p, tol)
    _, P = _flow_qp(profile, 1.0, q, p)
    return P - p, q - Q
