"""Actual, comparison and projected regimes side by side on one ensemble.

Prints the fitted decay rate of the frustrated population per regime, the
comparison/actual rate ratio and the peak violated population.
"""

import argparse

from _common import CONFIGS

from groundmode.config import load_run_config
from groundmode.runner import analyze, simulate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", nargs="?", default=str(CONFIGS / "relax_regimes.json"))
    ap.add_argument("--n-boot", type=int, default=200)
    args = ap.parse_args()
    cfg = load_run_config(args.config)
    results = simulate(cfg)
    reports = {r["regime"]: r for r in analyze(cfg.output, n_boot=args.n_boot)}
    for regime, res in results.items():
        rep = reports[regime]
        print(f"{regime:>10}: k={rep['k']} k_ci={rep['k_ci']} p0(end)={res.p0[-1]:.4f} max pV={res.pV.max():.3e}")
    ka, kc = reports.get("actual", {}).get("k"), reports.get("comparison", {}).get("k")
    if ka and kc is not None:
        print(f"comparison/actual rate ratio: {kc / ka:.3f}")


if __name__ == "__main__":
    main()
