"""Command line: validate, solve-classical, simulate, analyze, sweep.

Exit codes: 0 success, 1 runtime failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, load_run_config
from .network import NetworkError, bitstring, brute_force_solutions, load_network, solve_xor_network

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2


def cmd_validate(args) -> int:
    net = load_network(args.network)
    line = f"Q={net.Q} T={net.T} W={net.W}"
    if net.Q <= args.bound:
        n = len(brute_force_solutions(net, bound=args.bound))
        line += f", {n} solution" + ("" if n == 1 else "s")
    print(line)
    return EXIT_OK


def cmd_solve_classical(args) -> int:
    net = load_network(args.network)
    if args.method == "gf2":
        if args.gates != "xor":
            raise NetworkError("GF(2) elimination applies to xor gates only")
        sol = solve_xor_network(net)
        print(
            json.dumps(
                {
                    "particular": bitstring(sol.particular),
                    "basis": [bitstring(b) for b in sol.basis],
                    "dimension": sol.dimension,
                    "solutions": 2**sol.dimension,
                }
            )
        )
        return EXIT_OK
    sols = brute_force_solutions(net, args.gates, bound=args.bound)
    print(f"# {len(sols)} solution" + ("" if len(sols) == 1 else "s") + f" ({args.gates} gates)")
    for a in sols:
        print(bitstring(a))
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .runner import simulate

    cfg = load_run_config(args.config)
    results = simulate(cfg)
    for regime, res in results.items():
        print(
            f"{regime}: n_traj={res.n_traj} t_max={res.times[-1]:g} "
            f"p0={res.p0[-1]:.4f} pF={res.pF[-1]:.4f} pV={res.pV[-1]:.3e} -> {cfg.output}"
        )
    return EXIT_OK


def cmd_analyze(args) -> int:
    from .runner import analyze

    reports = analyze(args.trace_dir, threshold=args.threshold, n_boot=args.n_boot)
    for r in reports:
        print(json.dumps({k: r[k] for k in ("regime", "Q", "k", "t_h", "dT_threshold", "r_squared")}))
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .runner import sweep

    agg = sweep(args.config)
    print(f"{agg['experiment']}: {len(agg['points'])} points" + (f", order={agg['order']:.3f}" if "order" in agg else ""))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="groundmode", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse a network and count its solutions")
    v.add_argument("network")
    v.add_argument("--bound", type=int, default=24, help="largest Q to enumerate")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("solve-classical", help="classical oracle solutions")
    s.add_argument("network")
    s.add_argument("--gates", choices=("triode", "xor"), default="triode")
    s.add_argument("--method", choices=("brute", "gf2"), default="brute")
    s.add_argument("--bound", type=int, default=24)
    s.set_defaults(func=cmd_solve_classical)

    m = sub.add_parser("simulate", help="run the ensemble described by a config")
    m.add_argument("config")
    m.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="rate and nucleation reports for a run directory")
    a.add_argument("trace_dir")
    a.add_argument("--threshold", type=float, default=0.3)
    a.add_argument("--n-boot", type=int, default=1000)
    a.set_defaults(func=cmd_analyze)

    w = sub.add_parser("sweep", help="cartesian parameter sweep")
    w.add_argument("config")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NetworkError, ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
