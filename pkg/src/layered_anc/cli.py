"""Command-line front end: ``layered-anc <subcommand> [options]``.

Exit status is 0 on success, 1 when a network fails to load or validate and
2 on argument errors. Every error goes to stderr prefixed with ``error:``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import closed_forms as cf
from .network import (LayeredNetwork, NetworkError, ScalingVector, dump_network,
                      load_network, validate)
from .optimizer import (BruteForceSizeError, SolverConfig, brute_force_optimize,
                        diamond_analysis, optimize_network, stationarity_check)
from .propagation import check_feasibility, full_power_beta, snr_destination

EXAMPLES = ("grid2x2", "diamond", "linear_chain", "ecgal_n5")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _log_base(text: str) -> float:
    if text == "e":
        return math.e
    if text == "2":
        return 2.0
    raise argparse.ArgumentTypeError("log base must be 2 or e")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--input", type=Path, help="network description (JSON)")
    common.add_argument("--example", choices=EXAMPLES, help="use a shipped network file")
    common.add_argument("--output", type=Path, help="write results here (.json or .csv)")
    common.add_argument("--restarts", type=int, default=16)
    common.add_argument("--grid", type=int, default=201, help="brute-force points per dimension")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--log-base", type=_log_base, default=2.0, metavar="{2,e}")
    common.add_argument("--allow-negative-beta", action=argparse.BooleanOptionalAction,
                        default=True)

    gen = _Parser(add_help=False)
    gen.add_argument("--n", type=int, help="relays per layer")
    gen.add_argument("--layers", type=_int_list, help="number of relay layers")
    gen.add_argument("--gain", type=float)
    gen.add_argument("--power", type=float, help="relay power")
    gen.add_argument("--source-power", type=float)
    gen.add_argument("--noise", type=float, help="noise variance")
    gen.add_argument("--write-network", type=Path, help="save the generated network")

    parser = _Parser(prog="layered-anc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rate", parents=[common], help="SNR and rate for a scaling vector")
    p.add_argument("--beta", help="scaling vector, layers split by ';' and nodes by ','; "
                   "defaults to the file's beta, else full power")
    sub.add_parser("optimize", parents=[common], help="layer-by-layer optimization")
    sub.add_parser("brute", parents=[common], help="exhaustive grid search")
    p = sub.add_parser("stationarity", parents=[common], help="derivative tests at a point")
    p.add_argument("--beta")
    sub.add_parser("linear", parents=[common, gen], help="linear chain closed forms")
    sub.add_parser("ecgal", parents=[common, gen], help="equal-gain layered network")
    p = sub.add_parser("gap-sweep", parents=[common, gen], help="cut-set gap CSV")
    p.add_argument("--x-min", type=float, default=1.0)
    p.add_argument("--x-max", type=float, default=1e4)
    p.add_argument("--x-points", type=int, default=13)
    sub.add_parser("validate", parents=[common], help="check a network description")
    return parser


def example_path(name: str) -> Path:
    return Path(str(resources.files("layered_anc") / "data" / f"{name}.json"))


def _load(args) -> tuple[LayeredNetwork, ScalingVector | None]:
    if args.input and args.example:
        raise UsageError("--input and --example are mutually exclusive")
    if args.example:
        return load_network(example_path(args.example))
    if not args.input:
        raise UsageError("an input network is required (--input or --example)")
    return load_network(args.input)


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(restarts=args.restarts, grid_points_per_dim=args.grid,
                            tol=args.tol, allow_negative_beta=args.allow_negative_beta,
                            seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))


def _parse_beta(text: str, network: LayeredNetwork) -> ScalingVector:
    try:
        beta = ScalingVector(tuple(tuple(float(v) for v in layer.split(","))
                                   for layer in text.split(";")))
    except ValueError:
        raise UsageError(f"cannot parse --beta {text!r}")
    try:
        beta.check_shape(network)
    except NetworkError as exc:
        raise UsageError(str(exc))
    return beta


def _unit(args) -> str:
    return "bits" if args.log_base == 2.0 else "nats"


def _emit(args, payload: dict, rows: list[dict] | None = None, out=sys.stdout):
    text = json.dumps(payload, indent=2)
    if args.output is None:
        print(text, file=out)
        return
    if args.output.suffix == ".csv" and rows:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        args.output.write_text(buf.getvalue())
    else:
        args.output.write_text(text + "\n")


def _fmt_beta(beta: ScalingVector) -> str:
    return "; ".join(", ".join(f"{b:.6g}" for b in layer) for layer in beta.beta)


def cmd_validate(args, out) -> int:
    network, _ = _load(args)
    report = validate(network)
    for msg in report.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    if not report.ok:
        for msg in report.errors:
            print(f"error: {msg}", file=sys.stderr)
        return 1
    print(f"valid: {network.num_relay_layers} relay layers, sizes "
          f"{list(network.layer_sizes)}, {len(network.gains)} edges, "
          f"{len(report.warnings)} warnings", file=out)
    return 0


def _valid_network(args) -> tuple[LayeredNetwork, ScalingVector | None]:
    network, beta = _load(args)
    report = validate(network)
    if not report.ok:
        raise NetworkError("; ".join(report.errors))
    return network, beta


def cmd_rate(args, out) -> int:
    network, beta = _valid_network(args)
    if args.beta:
        beta = _parse_beta(args.beta, network)
    if beta is None:
        beta = full_power_beta(network)
    report = check_feasibility(network, beta, args.log_base)
    unit = _unit(args)
    print(f"beta: {_fmt_beta(beta)}", file=out)
    print(f"snr: {report.snr_dest:.10g}", file=out)
    print(f"rate_{unit}: {report.rate:.10g}", file=out)
    print(f"feasible: {str(report.feasible).lower()}", file=out)
    if args.output:
        _emit(args, {"beta": [list(b) for b in beta.beta], "snr": report.snr_dest,
                     "rate": report.rate, "unit": unit, "feasible": report.feasible,
                     "violations": [list(v) for v in report.violations]},
              report.rows(beta))
    return 0


def _run_optimizer(args, out, brute: bool) -> int:
    network, _ = _valid_network(args)
    config = _config(args)
    try:
        result = (brute_force_optimize(network, config, args.log_base) if brute
                  else optimize_network(network, config, args.log_base))
    except BruteForceSizeError as exc:
        raise UsageError(str(exc))
    bmax = check_feasibility(network, result.beta_opt).beta_max
    unit = _unit(args)
    print(f"beta_opt: {_fmt_beta(result.beta_opt)}", file=out)
    print(f"beta_max: {'; '.join(', '.join(f'{bmax[(l, j)]:.6g}' for j in range(1, n + 1)) for l, n in enumerate(network.layer_sizes, start=1))}", file=out)
    print(f"snr: {result.snr:.10g}", file=out)
    print(f"rate_{unit}: {result.rate:.10g}", file=out)
    if args.output:
        payload = result.to_dict()
        payload["unit"] = unit
        _emit(args, payload, result.csv_rows())
    return 0


def cmd_stationarity(args, out) -> int:
    network, beta = _valid_network(args)
    if args.beta:
        beta = _parse_beta(args.beta, network)
    payload = {}
    if beta is not None:
        payload["point"] = stationarity_check(network, beta).to_dict()
    if network.layer_sizes == (2,):
        a = diamond_analysis(network)
        payload["diamond"] = {
            "null_line_max_gradient_norm": max(r.gradient_norm for r in a.line_points),
            "null_line_max_snr": max(r.snr for r in a.line_points),
            "null_line_classifications": sorted({r.classification for r in a.line_points}),
            "slope_changes_sign": a.slope_sign_ok,
            "interior_roots": [r.tolist() for r in a.interior_roots],
            "min_residual_in_box": a.min_residual,
        }
    if not payload:
        raise UsageError("give --beta, or a two-relay diamond network")
    print(json.dumps(payload, indent=2), file=out)
    if args.output:
        _emit(args, payload)
    return 0


def _generator_given(args) -> bool:
    return any(getattr(args, k) is not None
               for k in ("n", "layers", "gain", "power", "source_power", "noise"))


def _single_layers(args, default: int) -> int:
    if args.layers is None:
        return default
    if len(args.layers) != 1:
        raise UsageError("--layers takes a single value here")
    return args.layers[0]


def cmd_linear(args, out) -> int:
    if _generator_given(args) and (args.input or args.example):
        raise UsageError("generator flags and --input/--example are mutually exclusive")
    if args.input or args.example:
        network, _ = _valid_network(args)
        if any(n != 1 for n in network.layer_sizes):
            raise NetworkError("not a linear chain")
        L = network.num_relay_layers
        gains = [network.gain((l, 1), (l + 1, 1)) for l in range(L + 1)]
        spec = cf.LinearChainSpec(gains, network.source_power,
                                  [p[0] for p in network.relay_powers], network.noise_variance)
    else:
        if args.n not in (None, 1):
            raise UsageError("a linear chain has one relay per layer")
        h = 1.0 if args.gain is None else args.gain
        P = 1.0 if args.power is None else args.power
        ps = P if args.source_power is None else args.source_power
        s2 = 1.0 if args.noise is None else args.noise
        L = _single_layers(args, 3)
        spec = cf.LinearChainSpec((h,) * (L + 1), ps, (P,) * L, s2)
    network = spec.network()
    if args.write_network:
        dump_network(network, args.write_network)
    bmax = cf.linear_beta_max_recursion(spec)
    closed = cf.linear_snr(spec, bmax, spec.L + 1)
    numeric = snr_destination(network, ScalingVector.from_arrays([[b] for b in bmax]))
    result = optimize_network(network, _config(args), args.log_base)
    payload = {"L": spec.L, "beta_max": bmax.tolist(), "snr_closed_form": closed,
               "snr_propagation": numeric, "snr_optimized": result.snr,
               "beta_opt": result.beta_opt.flat().tolist(),
               "rel_diff": abs(closed - numeric) / closed if closed else 0.0}
    equal = len(set(spec.gains)) == 1 and len(set(spec.relay_powers + (spec.source_power,))) == 1
    if equal:
        h, P = spec.gains[0], spec.source_power
        payload["snr_equal_chain_formula"] = cf.linear_equal_closed_form(
            spec.L, h, P, spec.noise_variance)
        payload["chain_rate_envelope"] = cf.chain_rate_envelope(
            spec.L, h, P, spec.noise_variance) / math.log(args.log_base)
    print(json.dumps(payload, indent=2), file=out)
    if args.output:
        _emit(args, payload)
    return 0


def cmd_ecgal(args, out) -> int:
    if args.input or args.example:
        raise UsageError("ecgal builds its network from generator flags")
    N = 5 if args.n is None else args.n
    L = _single_layers(args, 2)
    h = 1.0 if args.gain is None else args.gain
    P = 10.0 if args.power is None else args.power
    ps = P if args.source_power is None else args.source_power
    s2 = 1.0 if args.noise is None else args.noise
    try:
        spec = cf.EcgalSpec(N, L, h, P, ps, s2)
    except ValueError as exc:
        raise UsageError(str(exc))
    network = cf.ecgal_build(spec)
    if args.write_network:
        dump_network(network, args.write_network)
    bmax = cf.ecgal_symmetric_beta_max(spec)
    closed = cf.ecgal_opt_snr(spec)
    numeric = snr_destination(network, ScalingVector.from_arrays([np.full(N, b) for b in bmax]))
    result = optimize_network(network, _config(args), args.log_base)
    c1, c2 = cf.case1_leading_order(spec), cf.case2_leading_order(spec)
    payload = {
        "N": N, "L": L, "x": spec.x, "beta_max": bmax.tolist(),
        "snr_closed_form": closed, "snr_propagation": numeric,
        "snr_optimized": result.snr,
        "optimizer_max_beta_error": float(np.abs(
            result.beta_opt.flat() - np.repeat(bmax, N)).max()),
        "rate": result.rate, "unit": _unit(args),
        "mac_cutset_bound": cf.mac_cutset_bound(N, spec.x, args.log_base),
        "case1_leading_order": c1, "case1_rel_deviation": cf.leading_order_deviation(c1, spec),
        "case2_leading_order": c2, "case2_rel_deviation": cf.leading_order_deviation(c2, spec),
    }
    print(json.dumps(payload, indent=2), file=out)
    if args.output:
        _emit(args, payload)
    return 0


def cmd_gap_sweep(args, out) -> int:
    if args.input or args.example:
        raise UsageError("gap-sweep builds its networks from generator flags")
    if args.x_min <= 0 or args.x_max < args.x_min or args.x_points < 1:
        raise UsageError("need 0 < x-min <= x-max and x-points >= 1")
    N = 5 if args.n is None else args.n
    layers = args.layers or [1, 2, 5, 10]
    xs = np.logspace(math.log10(args.x_min), math.log10(args.x_max), args.x_points)
    ps = 1e6 if args.source_power is None else args.source_power
    rows = cf.gap_sweep(N, layers, xs, ps, args.log_base)
    text = cf.gap_csv(rows, _unit(args))
    if args.output:
        args.output.write_text(text)
    else:
        out.write(text)
    return 0


COMMANDS = {"rate": cmd_rate, "optimize": lambda a, o: _run_optimizer(a, o, False),
            "brute": lambda a, o: _run_optimizer(a, o, True),
            "stationarity": cmd_stationarity, "linear": cmd_linear, "ecgal": cmd_ecgal,
            "gap-sweep": cmd_gap_sweep, "validate": cmd_validate}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NetworkError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
