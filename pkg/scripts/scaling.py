"""Rate and nucleation time against network size on planted random networks."""

import argparse

from _common import CONFIGS

from groundmode.runner import sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs="?", default=str(CONFIGS / "sweep_Q.json"))
    args = ap.parse_args()
    agg = sweep(args.config)
    for p in agg["points"]:
        for r in p["reports"]:
            print(f"Q={p['Q']:>2} {r['regime']:>10}: k={r['k']} t_h={r['t_h']} dT(0.3)={r['dT_threshold']} p0(end)={r['p0_final']:.3f}")


if __name__ == "__main__":
    main()
