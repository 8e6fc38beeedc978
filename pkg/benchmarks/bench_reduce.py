"""Compiled kernels against the pure-Python fallback on the two-tent filtration.

    python3 benchmarks/bench_reduce.py --mesh 2 4
"""

import argparse
import math
import time

import numpy as np

from gfbarcode import _backend
from gfbarcode.cubical_complex import build_base_pair, build_fiber_pair, product_boundaries
from gfbarcode.filtration import filter_complex
from gfbarcode.generating_functions import derive_radii
from gfbarcode.persistence import reduce
from gfbarcode.radial_hamiltonians import RadialProfile, sample_generating_function

T = 2 * math.pi * 1e-4


def instance(m, a=0.75):
    profiles = [RadialProfile.tent(T, 0.5, (a, 0.0)), RadialProfile.tent(T, 0.5, (-a, 0.0))]
    gfqi = derive_radii([sample_generating_function(p, m) for p in profiles], 1, 2, T, 1.0 + a)
    prod = product_boundaries(build_base_pair(gfqi.Rb, m, 1), build_fiber_pair(gfqi.Rf, m, 2, 1))
    return gfqi, prod


def timed(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mesh", type=int, nargs="+", default=[2, 4])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--python-limit", type=int, default=2_000_000,
                    help="skip the fallback above this many cells")
    args = ap.parse_args(argv)
    names = ["python"] + (["compiled"] if _backend.BACKEND == "compiled" else [])
    print(f"{'m':>3} {'cells':>10} {'stage':>8} " + " ".join(f"{n:>10}" for n in names) + "   speedup")
    for m in args.mesh:
        gfqi, prod = instance(m)
        rows = {"filter": {}, "standard": {}, "twist": {}}
        lows = {}
        for name in names:
            if name == "python" and prod.size > args.python_limit:
                continue
            t, fm = timed(lambda: filter_complex(gfqi, prod, backend=name), args.repeat)
            rows["filter"][name] = t
            for strat in ("standard", "twist"):
                t, red = timed(lambda: reduce(fm, strat, record_ops=False, backend=name), args.repeat)
                rows[strat][name] = t
                lows[(name, strat)] = red.low
        ref = next(iter(lows.values()))
        assert all(np.array_equal(ref, v) for v in lows.values()), "backends disagree"
        for stage, t in rows.items():
            cells = " ".join(f"{t[n]:10.4f}" if n in t else f"{'-':>10}" for n in names)
            sp = f"{t['python'] / t['compiled']:7.1f}x" if len(t) == 2 and t["compiled"] > 0 else "      -"
            print(f"{m:>3} {prod.size:>10} {stage:>8} {cells}   {sp}")


if __name__ == "__main__":
    main()
