#!/usr/bin/env python3
"""Two-relay diamond: layered optimum, grid optimum, full power and stationarity."""
import argparse

import numpy as np

from layered_anc import (SolverConfig, brute_force_optimize, check_feasibility, diamond,
                         optimize_network, snr_destination)
from layered_anc.optimizer import DiamondGains, diamond_analysis
from layered_anc.propagation import full_power_beta


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--noise", type=float, default=0.1)
    ap.add_argument("--grid", type=int, default=201)
    args = ap.parse_args()

    net = diamond(noise_variance=args.noise)
    full = full_power_beta(net)
    opt = optimize_network(net)
    brute = brute_force_optimize(net, SolverConfig(grid_points_per_dim=args.grid))
    dg = DiamondGains.of(net)
    b = full.flat()[0]
    calculus = dg.weights[1] * (1 + dg.h_1t ** 2 * b * b) / (dg.weights[0] * b * dg.h_2t ** 2)

    print(f"beta_max           {np.round(full.flat(), 6).tolist()}")
    print(f"layered optimum    {np.round(opt.beta_opt.flat(), 6).tolist()}  SNR {opt.snr:.6f}")
    print(f"grid optimum       {np.round(brute.beta_opt.flat(), 6).tolist()}  SNR {brute.snr:.6f}")
    print(f"stationary beta_2  {calculus:.6f} (first relay at its bound)")
    print(f"full power SNR     {snr_destination(net, full):.6f}")
    rep = check_feasibility(net, opt.beta_opt)
    print(f"relay 2 power use  {rep.transmit_power[(1, 2)]:.4g} of {net.relay_power((1, 2))}")

    a = diamond_analysis(net)
    print(f"h_s = 0 line: max |grad| {max(r.gradient_norm for r in a.line_points):.2e}, "
          f"slope flips sign: {a.slope_sign_ok}, interior roots: {len(a.interior_roots)}")


if __name__ == "__main__":
    main()
