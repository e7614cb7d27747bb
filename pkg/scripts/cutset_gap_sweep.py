#!/usr/bin/env python3
"""Cut-set gap of equal-gain layered networks versus x, one curve per layer count."""
import argparse
import sys

import numpy as np

from layered_anc.closed_forms import gap_csv, gap_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--layers", default="1,2,5,10")
    ap.add_argument("--x-min", type=float, default=1.0)
    ap.add_argument("--x-max", type=float, default=1e4)
    ap.add_argument("--x-points", type=int, default=41)
    ap.add_argument("--source-power", type=float, default=1e6)
    ap.add_argument("--output", help="CSV path (default stdout)")
    args = ap.parse_args()

    layers = [int(v) for v in args.layers.split(",")]
    xs = np.logspace(np.log10(args.x_min), np.log10(args.x_max), args.x_points)
    rows = gap_sweep(args.n, layers, xs, args.source_power)
    text = gap_csv(rows)
    if args.output:
        with open(args.output, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    for L in layers:
        g = [r.gap for r in rows if r.L == L]
        print(f"L={L:3d}  gap at x_max {g[-1]:.4f} bits", file=sys.stderr)


if __name__ == "__main__":
    main()
