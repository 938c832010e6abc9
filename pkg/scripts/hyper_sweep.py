"""Sweep Nelson norm ratios and the Gross derivative gap over p for one test function.

Usage: python3 scripts/hyper_sweep.py --function bump:0,2,0.7 --p-grid 1.25,1.5,2,3,4,8
"""

import argparse

from deficitlab import generators as gen
from deficitlab import hyper


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--function", default="bump:0,1,1")
    ap.add_argument("--p-grid", default="1.5,2,4")
    ap.add_argument("--t-grid", default="0.05,0.1,0.25,0.5,1,2")
    args = ap.parse_args()

    f = gen.load_function(args.function)
    ps, ts = gen.parse_grid(args.p_grid), gen.parse_grid(args.t_grid)
    print("norm ratio ||P_t f||_q(t) / ||f||_p")
    print("p \\ t " + "".join(f"{t:>10g}" for t in ts))
    for p in ps:
        ratios = [hyper.nelson_check(f, p, t) for t in ts]
        print(f"{p:<6g}" + "".join(f"{r.lhs.value / r.rhs.value:>10.6f}" for r in ratios))
    if isinstance(f, hyper.LogLinear):
        return
    print(f"\n{'p':>6} {'finite diff':>14} {'analytic':>14} {'gap':>10}")
    for p in ps:
        r = hyper.gross_derivative_check(f, p)
        print(f"{p:>6g} {r.params['deriv_lhs']:>14.8f} {r.params['deriv_rhs']:>14.8f} {r.lhs.value:>10.2e}")


if __name__ == "__main__":
    main()
