"""Distance between matched projected and actual runs as dt shrinks."""

import argparse

from _common import CONFIGS

from groundmode.runner import sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs="?", default=str(CONFIGS / "sweep_dt.json"))
    args = ap.parse_args()
    agg = sweep(args.config)
    for p in agg["points"]:
        print(f"dt={p['dt']:g} distance={p['distance']:.4e}")
    print(f"order={agg['order']:.3f}")


if __name__ == "__main__":
    main()
