"""Conjectured barcodes for the two-tent test cases, written as barcode JSON.

For small T the composed time-one map is close to the time-one flow of
F = H1 + H2, so its barcode is approximated by the sublevel barcode of F on
the sphere. With two tent bumps at (+-a, 0) the critical points of F lie on
the first axis and are found here by root finding on the closed-form profile,
independently of the package.
"""

import argparse
import json
import math
import os

from scipy.optimize import brentq

T_DEFAULT = 2 * math.pi * 1e-4


def h(s, T):
    """Tent profile: h' = -T * tent on [0, 1/2] with its peak at 1/4."""
    if s >= 0.5:
        return 0.0
    if s >= 0.25:
        return 2.0 * T * (0.5 - s) ** 2
    return T * (0.25 - 2.0 * s * s)


def dh(s, T):
    if s >= 0.5:
        return 0.0
    if s >= 0.25:
        return -4.0 * T * (0.5 - s)
    return -4.0 * T * s


def f_axis(x, a, T):
    return h((x - a) ** 2 / 2, T) + h((x + a) ** 2 / 2, T)


def df_axis(x, a, T):
    return (x - a) * dh((x - a) ** 2 / 2, T) + (x + a) * dh((x + a) ** 2 / 2, T)


def reference_bars(a, T):
    """Bars (degree, birth, death) of the sublevel filtration of F on S^2."""
    peak = h(0.0, T)
    if 2 * a >= 2.0:
        # disjoint supports: the two maxima are joined through the zero level
        return [(0, 0.0, math.inf), (1, 0.0, peak), (2, peak, math.inf)]
    centre = f_axis(0.0, a, T)
    # the origin is a saddle when F decreases towards it along the axis
    eps = 1e-9
    if df_axis(eps, a, T) > 0:
        # one saddle at the origin between two maxima
        return [(0, 0.0, math.inf), (1, centre, peak), (2, peak, math.inf)]
    # origin is a maximum; two saddles between it and the bump centres
    xs = brentq(df_axis, 1e-6, a - 1e-6, args=(a, T), xtol=1e-15, rtol=1e-15)
    s = f_axis(xs, a, T)
    top = max(centre, peak)
    low = min(centre, peak)
    return [(0, 0.0, math.inf), (1, s, low), (1, s, low), (2, top, math.inf)]


def records(bars):
    out = {}
    for d, b, e in bars:
        out[(d, b, e)] = out.get((d, b, e), 0) + 1
    recs = []
    for (d, b, e), k in sorted(out.items()):
        r = {"degree": d, "birth": b}
        if e != math.inf:
            r["death"] = e
        r["multiplicity"] = k
        recs.append(r)
    return recs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, default=T_DEFAULT)
    ap.add_argument("--outdir", default=os.path.join(os.path.dirname(__file__), "..", "configs"))
    args = ap.parse_args()
    for name, a in (("case_I", 0.75), ("case_II", 0.70)):
        recs = records(reference_bars(a, args.T))
        path = os.path.join(args.outdir, f"reference_{name}.json")
        with open(path, "w") as fh:
            fh.write(json.dumps(recs, indent=1) + "\n")
        print(path)
        for r in recs:
            print("  ", {k: (v / args.T if isinstance(v, float) else v) for k, v in r.items()})


if __name__ == "__main__":
    main()
