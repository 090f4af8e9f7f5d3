"""Annealed actual-regime ensembles on the canonical network.

Runs each shipped anneal schedule, analyzes the traces and prints p0 and the
frequency of the encoded solution among the terminal measurements.
"""

import argparse

from _common import CONFIGS

from groundmode.config import load_run_config
from groundmode.runner import analyze, simulate

SOLUTION = "110101"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="*", default=[str(CONFIGS / "anneal_quasistatic.json"), str(CONFIGS / "anneal_fluctuating.json")])
    ap.add_argument("--n-boot", type=int, default=200)
    args = ap.parse_args()
    for path in args.configs:
        cfg = load_run_config(path)
        res = simulate(cfg)["actual"]
        rep = analyze(cfg.output, n_boot=args.n_boot)[0]
        freq = res.counts.get(SOLUTION, 0) / res.n_traj
        print(
            f"{cfg.output.name}: n={res.n_traj} p0(0)={res.p0[0]:.3f} p0(end)={res.p0[-1]:.3f} "
            f"max p0={res.p0.max():.3f} {SOLUTION} freq={freq:.3f} t_h={rep['t_h']} dT(0.3)={rep['dT_threshold']}"
        )


if __name__ == "__main__":
    main()
