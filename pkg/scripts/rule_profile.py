"""Profile how often each orientation rule fires, per grid cell.

Runs the grid twice: once with the bivariate rule applied before collider
detection and once with it held until every other rule has settled.
"""

import argparse
import sys

from relcd.harness import TrialConfig, profile_to_csv, rule_profile


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=2)
    parser.add_argument("--prefix", default="profile")
    args = parser.parse_args()
    config = TrialConfig(trials=args.trials, seed=args.seed)
    for mode in ("rbo_first", "rbo_last"):
        cells, notes = rule_profile(config, mode=mode, workers=args.workers)
        out = f"{args.prefix}_{mode}.csv"
        with open(out, "w") as fh:
            fh.write(profile_to_csv(cells))
        for note in notes:
            sys.stderr.write(note + "\n")
        print(f"wrote {out}")


if __name__ == "__main__":
    main()
