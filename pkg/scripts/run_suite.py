"""Run a config and print a per-suite verdict table.

Usage: python3 scripts/run_suite.py configs/default.json [--jobs 2] [--out out/default]
"""

import argparse
import sys

from deficitlab import runner
from deficitlab.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=None)
    ap.add_argument("--seed", default=None)
    args = ap.parse_args()

    cfg = load_config(args.config, seed=args.seed, output_dir=args.out)
    status, summary = runner.run(cfg, jobs=args.jobs)
    print(f"{'suite':<20} {'kind':<13} {'rows':>6} {'holds':>7} {'within':>7} {'violated':>8}")
    for s in summary["suites"]:
        a = s["asserted"]
        print(f"{s['name']:<20} {s['kind']:<13} {s['rows']:>6} {a['holds']:>7} "
              f"{a['holds_within_error']:>7} {a['violated']:>8}")
    print(f"artifacts in {cfg.output_dir}; exit status {status}")
    return status


if __name__ == "__main__":
    sys.exit(main())
