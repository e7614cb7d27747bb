#!/usr/bin/env python3
"""Compare layer-by-layer optimization with the brute-force grid on random networks.

Writes every instance where the grid beats the layered solver by more than
the tolerance to a JSON file.
"""
import argparse
import json
import time

import numpy as np

from layered_anc import (SolverConfig, brute_force_optimize, optimize_network,
                         random_network)
from layered_anc.network import network_to_dict


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--layers", default="2,2")
    ap.add_argument("--grid", type=int, default=200)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--tol", type=float, default=1e-3)
    ap.add_argument("--signed", action="store_true", help="draw gains from [-2, 2]")
    ap.add_argument("--output", default="decomposition_counterexamples.json")
    args = ap.parse_args()

    sizes = [int(v) for v in args.layers.split(",")]
    rng = np.random.default_rng(args.seed)
    cfg = SolverConfig(grid_points_per_dim=args.grid)
    gains = (-2.0, 2.0) if args.signed else (0.1, 2.0)
    bad, t0 = [], time.perf_counter()
    for i in range(args.count):
        net = random_network(rng, sizes, gain_range=gains)
        lay, bru = optimize_network(net, cfg), brute_force_optimize(net, cfg)
        rel = (bru.snr - lay.snr) / bru.snr
        flag = "  <-- grid wins" if rel > args.tol else ""
        print(f"{i:3d}  layered {lay.snr:12.5f}  grid {bru.snr:12.5f}  rel {rel:+.2e}{flag}")
        if rel > args.tol:
            bad.append({"index": i, "relative_gap": rel, "network": network_to_dict(net),
                        "layered": lay.to_dict(), "brute": bru.to_dict()})
    with open(args.output, "w") as f:
        json.dump({"seed": args.seed, "grid_points_per_dim": args.grid,
                   "tolerance": args.tol, "counterexamples": bad}, f, indent=2)
    print(f"{len(bad)}/{args.count} counterexamples, {time.perf_counter() - t0:.1f}s "
          f"-> {args.output}")


if __name__ == "__main__":
    main()
