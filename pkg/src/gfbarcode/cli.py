"""Command-line front end: config-driven pipeline runs and per-stage sub-commands."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .cubical_complex import (build_base_pair, build_fiber_pair, predicted_cell_count,
                              product_boundaries)
from .errors import BudgetExceeded, ConfigInvalid, GFBarcodeError, InvalidBounds, MemoryCapExceeded
from .filtration import FilteredBoundaryMatrix, filter_complex
from .generating_functions import derive_radii, gradient_bound
from .persistence import Barcode, bottleneck, error_budget, extract_barcode, reduce
from .radial_hamiltonians import RadialProfile, c0_c1_bounds, sample_generating_function

DEFAULT_MEMORY_CAP = 50_000_000


# ---------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    pieces: list
    mesh: int
    n: int = 1
    inverse_tolerance: float | None = None
    memory_cap: int = DEFAULT_MEMORY_CAP
    outputs: dict = field(default_factory=dict)
    reference_barcode: str | None = None
    R: float | None = None
    T: float | None = None
    strategy: str = "twist"
    base_dir: str = "."

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "RunConfig":
        known = {"pieces", "mesh", "n", "inverse_tolerance", "memory_cap", "outputs",
                 "reference_barcode", "R", "T", "strategy"}
        extra = set(d) - known - {"name", "description"}
        if extra:
            raise ConfigInvalid(f"unknown config fields {sorted(extra)}")
        for key in ("pieces", "mesh"):
            if key not in d:
                raise ConfigInvalid(f"config is missing {key!r}")
        args = {k: d[k] for k in known if k in d and d[k] is not None}
        cfg = cls(base_dir=base_dir, **args)
        if not isinstance(cfg.mesh, int) or cfg.mesh < 1:
            raise ConfigInvalid("mesh must be a positive integer")
        if cfg.n != 1:
            raise ConfigInvalid("only planar pieces (n = 1) are supported")
        if cfg.strategy not in ("standard", "twist"):
            raise ConfigInvalid(f"unknown strategy {cfg.strategy!r}")
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(d, os.path.dirname(os.path.abspath(path)))

    def resolve(self, path):
        if path is None:
            return None
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)


def build_profile(spec: dict) -> RadialProfile:
    kind = spec.get("kind", "tent")
    center = tuple(spec.get("center", (0.0, 0.0)))
    try:
        if kind == "tent":
            return RadialProfile.tent(spec["T"], spec.get("support", 0.5), center, spec.get("peak"))
        if kind == "knots":
            return RadialProfile.from_derivative(spec["knots"], spec["slopes"], center,
                                                 spec.get("T"), spec.get("T2"))
        if kind == "zero":
            return RadialProfile.zero(center, spec.get("support", 0.5),
                                      spec.get("T", 0.0), spec.get("T2", 0.0))
    except KeyError as exc:
        raise ConfigInvalid(f"piece of kind {kind!r} is missing {exc}") from exc
    raise ConfigInvalid(f"unknown piece kind {kind!r}")


def gate_value(profile: RadialProfile) -> float:
    """``sqrt(2r)(|c| + sqrt(2r)) T' + T`` for one piece; must stay below 1/2."""
    return c0_c1_bounds(profile)[1]


def check_gate(profiles) -> list[float]:
    vals = [gate_value(p) for p in profiles]
    for j, v in enumerate(vals):
        if not v < 0.5:
            raise InvalidBounds(f"piece {j} fails the small-map gate: {v:.6g} >= 1/2")
    return vals


def default_bounds(profiles) -> tuple[float, float]:
    """``T`` bounding every ``|grad S_j|`` and ``R`` enclosing every support."""
    T = max(p.support_radius * p.deriv_bound for p in profiles)
    R = max(float(np.hypot(*p.center)) + p.support_radius for p in profiles)
    return T, R


# ---------------------------------------------------------------------------
# pipeline

def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except GFBarcodeError as exc:
        raise exc.with_stage(name)


def run_pipeline(cfg: RunConfig, threads: int = 1, log=None):
    """Run every stage; returns ``(barcode, budget, report)``."""
    timings = {}
    say = log or (lambda msg: None)

    def timed(name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        out = _stage(name, fn, *args, **kwargs)
        timings[name] = time.perf_counter() - t0
        say(f"{name}: {timings[name]:.2f}s")
        return out

    profiles = [_stage("config", build_profile, p) for p in cfg.pieces]
    gates = _stage("config", check_gate, profiles)
    T0, R0 = default_bounds(profiles)
    T = cfg.T if cfg.T is not None else T0
    R = cfg.R if cfg.R is not None else R0
    m = cfg.mesh

    pieces = timed("sample", lambda: [sample_generating_function(p, m, cfg.inverse_tolerance, threads)
                                      for p in profiles])
    gfqi = timed("compose", derive_radii, pieces, cfg.n, len(pieces), T, R)
    predicted = predicted_cell_count(gfqi.Rb, gfqi.Rf, m, cfg.n, gfqi.N)
    if predicted > cfg.memory_cap:
        raise MemoryCapExceeded(predicted, cfg.memory_cap, stage="complex")
    base = timed("complex", build_base_pair, gfqi.Rb, m, cfg.n)
    fiber = timed("complex_fiber", build_fiber_pair, gfqi.Rf, m, gfqi.fiber_dim, gfqi.quad_index)
    prod = timed("product", product_boundaries, base, fiber)
    filtered = timed("filtration", filter_complex, gfqi, prod)
    red = timed("reduction", reduce, filtered, cfg.strategy, False)
    barcode = timed("barcode", extract_barcode, red, filtered)
    budget = error_budget(gfqi, m)

    report = {
        "mesh": m,
        "constants": gfqi.constants(),
        "gate": gates,
        "gradient_bound": gradient_bound(gfqi),
        "sampler_sup_error": [p.sup_error for p in pieces],
        "cells": {
            "predicted": predicted,
            "base": base.complex.counts(),
            "base_quotient": base.counts(),
            "fiber": fiber.complex.counts(),
            "fiber_relative": fiber.counts(),
            "product": prod.size,
            "product_by_degree": prod.degree_counts(),
        },
        "error_budget": budget,
        "error_budget_radial": error_budget(gfqi, m, form="radial"),
        "bars": barcode.records(),
        "longest_finite_bar": barcode.longest_finite(),
    }
    ref_path = cfg.resolve(cfg.reference_barcode)
    if ref_path:
        ref = _stage("compare", Barcode.read, ref_path)
        dist = bottleneck(barcode, ref)
        report["reference"] = ref_path
        report["bottleneck_to_reference"] = dist
        if not dist <= budget:
            raise BudgetExceeded(f"bottleneck distance {dist:.6g} exceeds the error budget {budget:.6g}",
                                 stage="compare")
    report["timings"] = timings
    return barcode, budget, report


# ---------------------------------------------------------------------------
# plotting

def plot_barcode(barcode: Barcode, path, scale=None, width: int = 640) -> None:
    """Deterministic SVG: one segment per bar, grouped by degree, arrows for infinite bars."""
    bars = [(d, b, e) for (d, b, e), k in sorted(barcode.bars.items()) for _ in range(k)]
    ends = [b for _, b, _ in bars] + [e for _, _, e in bars if e != math.inf]
    if scale is None:
        lo, hi = (min(ends), max(ends)) if ends else (0.0, 1.0)
        if hi <= lo:
            hi = lo + 1.0
        pad = 0.05 * (hi - lo)
        lo, hi = lo - pad, hi + pad
    else:
        lo, hi = scale
    left, right, top, row = 60, width - 30, 20, 16
    height = top + row * (len(bars) + len({d for d, _, _ in bars})) + 50

    def x(v):
        return left + (v - lo) / (hi - lo) * (right - left)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           '<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="6" refY="4" '
           'orient="auto"><path d="M0,0 L8,4 L0,8 z" fill="black"/></marker></defs>',
           '<rect width="100%" height="100%" fill="white"/>']
    axis_y = height - 30
    out.append(f'<line x1="{left}" y1="{axis_y}" x2="{right}" y2="{axis_y}" stroke="black"/>')
    for i in range(5):
        v = lo + (hi - lo) * i / 4
        out.append(f'<line x1="{x(v):.3f}" y1="{axis_y}" x2="{x(v):.3f}" y2="{axis_y + 5}" stroke="black"/>')
        out.append(f'<text x="{x(v):.3f}" y="{axis_y + 18}" font-size="10" text-anchor="middle">{v:.4g}</text>')
    y = top
    current = None
    for d, b, e in bars:
        if d != current:
            current = d
            out.append(f'<text x="5" y="{y + 10}" font-size="11">H{d}</text>')
            y += row
        if e == math.inf:
            out.append(f'<line x1="{x(b):.3f}" y1="{y}" x2="{right:.3f}" y2="{y}" stroke="black" '
                       'stroke-width="2" marker-end="url(#arrow)"/>')
        else:
            out.append(f'<line x1="{x(b):.3f}" y1="{y}" x2="{x(e):.3f}" y2="{y}" stroke="black" stroke-width="2"/>')
        y += row
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# triplet matrices

def read_triplets(path) -> FilteredBoundaryMatrix:
    """Load ``j row col`` triplets (local to each degree) as a matrix filtered by position.

    An optional ``# counts c0 c1 ...`` line fixes the number of cells per
    degree; otherwise counts are inferred from the largest indices seen.
    """
    counts = None
    entries = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] == "counts":
                    counts = [int(c) for c in parts[1:]]
                continue
            try:
                j, r, c = (int(t) for t in line.split())
            except ValueError as exc:
                raise ConfigInvalid(f"bad triplet line {line!r}") from exc
            if j < 1 or r < 0 or c < 0:
                raise ConfigInvalid(f"bad triplet line {line!r}")
            entries.append((j, r, c))
    if counts is None:
        top = max((j for j, _, _ in entries), default=0)
        counts = [0] * (top + 1)
        for j, r, c in entries:
            counts[j] = max(counts[j], c + 1)
            counts[j - 1] = max(counts[j - 1], r + 1)
    start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    n = int(start[-1])
    cols = {}
    for j, r, c in entries:
        if j >= len(counts) or c >= counts[j] or r >= counts[j - 1]:
            raise ConfigInvalid(f"triplet ({j}, {r}, {c}) is out of range")
        cols.setdefault(int(start[j] + c), set()).symmetric_difference_update({int(start[j - 1] + r)})
    indptr = np.zeros(n + 1, dtype=np.int64)
    flat = []
    for col in range(n):
        s = sorted(cols.get(col, ()))
        flat.extend(s)
        indptr[col + 1] = len(flat)
    degrees = np.repeat(np.arange(len(counts)), counts).astype(np.int8)
    return FilteredBoundaryMatrix(degrees, np.arange(n, dtype=float), np.arange(n, dtype=np.int64),
                                  indptr, np.asarray(flat, dtype=np.int32), 0)


# ---------------------------------------------------------------------------
# entry point

def _cmd_compute(args) -> int:
    cfg = RunConfig.load(args.config)
    if args.mesh is not None:
        cfg.mesh = args.mesh
    if args.memory_cap is not None:
        cfg.memory_cap = args.memory_cap
    if args.reference is not None:
        cfg.reference_barcode = os.path.abspath(args.reference)
    out = args.out or cfg.resolve(cfg.outputs.get("barcode"))
    svg = args.svg or cfg.resolve(cfg.outputs.get("svg"))
    rep = args.report or cfg.resolve(cfg.outputs.get("report"))
    log = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    barcode, budget, report = run_pipeline(cfg, threads=args.threads, log=log)
    for path in (out, svg, rep):
        if path and os.path.dirname(path):
            os.makedirs(os.path.dirname(path), exist_ok=True)
    if out:
        barcode.write(out)
    else:
        sys.stdout.write(barcode.dumps())
    if svg:
        plot_barcode(barcode, svg)
    if rep:
        with open(rep, "w") as fh:
            json.dump(report, fh, indent=1, default=float)
            fh.write("\n")
    print(f"error budget {budget:.6g}", file=sys.stderr)
    if "bottleneck_to_reference" in report:
        print(f"bottleneck to reference {report['bottleneck_to_reference']:.6g}", file=sys.stderr)
    return 0


def _cmd_sample(args) -> int:
    cfg = RunConfig.load(args.config)
    m = args.mesh or cfg.mesh
    profiles = [build_profile(p) for p in cfg.pieces]
    check_gate(profiles)
    out = []
    for prof in profiles:
        s = _stage("sample", sample_generating_function, prof, m, cfg.inverse_tolerance, args.threads)
        pts, vals = s.points()
        out.append({"mesh": m, "sup_error": s.sup_error, "min": s.min_value,
                    "max": float(vals.max()) if vals.size else 0.0,
                    "points": [[int(a), int(b), float(v)] for (a, b), v in zip(pts, vals)]})
    text = json.dumps(out) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_reduce(args) -> int:
    fm = read_triplets(args.matrix)
    fm.check()
    red = reduce(fm, args.strategy, False)
    result = {"pairing": [[int(r), int(c)] for c, r in sorted(red.pairing.items())],
              "unpaired": red.unpaired.tolist(),
              "bars": extract_barcode(red, fm).records()}
    sys.stdout.write(json.dumps(result, indent=1) + "\n")
    return 0


def _cmd_bottleneck(args) -> int:
    try:
        a, b = Barcode.read(args.a), Barcode.read(args.b)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigInvalid(f"cannot read barcode: {exc}") from exc
    print(repr(bottleneck(a, b)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gfbarcode", description="Barcodes of compositions of radial Hamiltonian flows.")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="run the full pipeline")
    c.add_argument("--config", required=True)
    c.add_argument("--mesh", type=int)
    c.add_argument("--out")
    c.add_argument("--svg")
    c.add_argument("--report")
    c.add_argument("--reference")
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("--memory-cap", type=int, dest="memory_cap")
    c.add_argument("-v", "--verbose", action="store_true")
    c.set_defaults(func=_cmd_compute)

    s = sub.add_parser("sample", help="sample the generating functions only")
    s.add_argument("--config", required=True)
    s.add_argument("--mesh", type=int)
    s.add_argument("--out")
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=_cmd_sample)

    r = sub.add_parser("reduce", help="reduce a triplet boundary matrix filtered by position")
    r.add_argument("--matrix", required=True)
    r.add_argument("--strategy", choices=("standard", "twist"), default="standard")
    r.set_defaults(func=_cmd_reduce)

    b = sub.add_parser("bottleneck", help="bottleneck distance between two barcode files")
    b.add_argument("a")
    b.add_argument("b")
    b.set_defaults(func=_cmd_bottleneck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GFBarcodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
