"""Random search for negative conjecture deficits among convex polytope pairs.

Usage: python3 scripts/geometry_search.py --dim 2 --pairs 20000 --seed 7 --out out/geom
"""

import argparse
import json
from pathlib import Path

from deficitlab import geometry


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--dim", type=int, choices=(2, 3), default=2)
    ap.add_argument("--pairs", type=int, default=10_000)
    ap.add_argument("--k-max", type=int, default=12)
    ap.add_argument("--generators", default=",".join(geometry.GENERATORS))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-worst", type=int, default=5)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    cfg = geometry.SearchConfig(dim=args.dim, n_pairs=args.pairs, k_max=args.k_max,
                                generators=tuple(args.generators.split(",")), seed=args.seed, n_worst=args.n_worst)
    res = geometry.search_counterexamples(cfg)
    summary = res.summary()
    if args.out:
        summary["worst_files"] = [str(p) for p in geometry.write_worst(res, Path(args.out))]
    print(json.dumps(summary, indent=2, sort_keys=True))
    for key, rows in res.worst.items():
        print(f"smallest {key}:")
        for r in rows:
            print(f"  {r[key]: .6e}  seeds {r['seedA']} {r['seedB']}")


if __name__ == "__main__":
    main()
