"""Command-line entry point.

Subcommands::

    eval   --density NAME[,NAME...]         functional catalog rows
    check  --ineq NAME|all --pair A,B       inequality reports on a pair
    clt    --density NAME --n-max N         normalized-sum trace (+ SVG)
    hyper  --function SPEC [--g SPEC]       hypercontractivity checks
    geom   --dim D --pairs N                random convex body search
    report FILE...                          merge CSVs into one JSON summary
    run    --config PATH                    execute a full run config

Global flags (``--config``, ``--seed``, ``--jobs``, ``--out``) may appear
before or after the subcommand. ``DEFICITLAB_SEED`` overrides the config
seed when ``--seed`` is absent.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import clt, geometry, hyper, inequalities, runner
from . import functionals as fn
from . import generators as gen
from .config import SEED_ENV, load_config
from .errors import DeficitLabError, InvalidConfig
from .plots import line_chart
from .reports import Verdict

CHECK_COLUMNS = ("name", "theta", "lambda", "lhs", "rhs", "deficit", "err", "verdict")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(runner.EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=d(None), help="run config JSON")
    p.add_argument("--seed", default=d(None), help="master seed (u64), overrides config and env")
    p.add_argument("--jobs", type=int, default=d(1), help="worker processes (default 1)")
    p.add_argument("--out", default=d(None), help="output directory")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="deficitlab",
        description="Numerical checks of entropy, Fisher information and related inequalities.",
        parents=[_global_flags(False)],
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "examples:\n"
            "  deficitlab eval --density std-gaussian-1d\n"
            "  deficitlab check --ineq interpolation --theta-grid 0:1:0.1\n"
            "  deficitlab clt --density bimodal-1d --n-max 16 --out out\n"
            "  deficitlab run --config configs/default.json --jobs 2"
        ),
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    common = [_global_flags(True)]

    p = sub.add_parser("eval", parents=common, help="functional catalog of named densities or JSON files")
    p.add_argument("--density", required=True, help="comma-separated names or density JSON files")
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.add_argument("--method", choices=("quadrature", "monte_carlo"), default=None)
    p.add_argument("--mc-samples", type=int, default=fn.DEFAULT_SETTINGS.mc_samples)

    p = sub.add_parser("check", parents=common, help="inequality deficits for one pair")
    p.add_argument("--ineq", default="all", help=f"one of {', '.join(inequalities.NAMES)} or all")
    p.add_argument("--pair", default="bimodal-1d,skewed-mixture-1d", help="A,B (names or JSON files)")
    p.add_argument("--theta-grid", default="0:1:0.1", help="a:b:step or comma list")
    p.add_argument("--t-grid", default=",".join(str(t) for t in inequalities.DEFAULT_T_GRID))

    p = sub.add_parser("clt", parents=common, help="entropic CLT trace")
    p.add_argument("--density", default="bimodal-1d")
    p.add_argument("--n-max", type=int, default=16)
    p.add_argument("--budget", type=int, default=None, help="mixture component budget")

    p = sub.add_parser("hyper", parents=common, help="Nelson and Gross checks on the OU semigroup")
    p.add_argument("--function", default="loglinear:1", help="loglinear:a | bump:c,h,w[,floor] | sinexp:freq")
    p.add_argument("--g", default=None, help="second function; enables the two-function derivative check")
    p.add_argument("--p-grid", default="1.5,2,4")
    p.add_argument("--t-grid", default="0.1,0.5,1")
    p.add_argument("--theta", type=float, default=0.5)

    p = sub.add_parser("geom", parents=common, help="random convex body pairs")
    p.add_argument("--dim", type=int, default=2, choices=(2, 3))
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--k-min", type=int, default=None)
    p.add_argument("--k-max", type=int, default=12)
    p.add_argument("--n-worst", type=int, default=5)

    p = sub.add_parser("report", parents=common, help="aggregate CSV files into one JSON summary")
    p.add_argument("files", nargs="+")

    sub.add_parser("run", parents=common, help="execute --config")
    return parser


# --------------------------------------------------------------------------


def _seed(args, default: int = 0) -> int:
    raw = args.seed if args.seed is not None else os.environ.get(SEED_ENV)
    if raw is None:
        return default
    try:
        seed = int(raw)
    except ValueError:
        raise InvalidConfig(f"seed must be an integer, got {raw!r}") from None
    if not 0 <= seed < 2**64:
        raise InvalidConfig("seed must fit in an unsigned 64-bit integer")
    return seed


def _emit(args, name: str, columns, rows) -> None:
    text = runner.csv_text(columns, rows)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.csv").write_text(text)
    sys.stdout.write(text)


def _status(rows) -> int:
    bad = any(r.get("verdict") == Verdict.VIOLATED.value for r in rows)
    return runner.EXIT_VIOLATION if bad else runner.EXIT_OK


def cmd_eval(args) -> int:
    st = fn.EstimatorSettings(method=args.method, mc_samples=args.mc_samples, seed=_seed(args) % 2**32)
    rows = []
    for spec in args.density.split(","):
        X = gen.load_density(spec)
        rows.append({"density": spec, "dim": X.dim, **fn.catalog(X, st).to_record()})
    cols = tuple(rows[0])
    if args.format == "csv":
        _emit(args, "eval", cols, rows)
    else:
        for r in rows:
            width = max(len(k) for k in r)
            print("\n".join(f"{k:<{width}}  {runner.fmt(v)}" for k, v in r.items()))
    return runner.EXIT_OK


def cmd_check(args) -> int:
    a, _, b = args.pair.partition(",")
    X, Y = gen.load_density(a), gen.load_density(b or a)
    names = list(inequalities.NAMES) if args.ineq == "all" else [args.ineq]
    unknown = [n for n in names if n not in inequalities.NAMES]
    if unknown:
        raise InvalidConfig(f"unknown inequality {unknown[0]!r}")
    thetas, ts = gen.parse_grid(args.theta_grid), gen.parse_grid(args.t_grid)
    rows = [r.to_record() for n in names for r in inequalities.evaluate(n, X, Y, thetas, ts)]
    _emit(args, "check", CHECK_COLUMNS, rows)
    return _status(rows)


def cmd_clt(args) -> int:
    Z = gen.load_density(args.density)
    kw = {} if args.budget is None else {"budget": args.budget}
    trace = clt.clt_trace(Z, args.n_max, **kw)
    rows = [row.to_record() for row in trace.rows]
    _emit(args, "clt", clt.CSV_COLUMNS, rows)
    if args.out:
        n = [r.n for r in trace.rows]
        line_chart(
            Path(args.out) / "clt.svg",
            [("D(U_n)", n, [r.D.value for r in trace.rows]),
             ("entCLT lower bound", n, [r.ent_clt.lhs.value for r in trace.rows])],
            "n", "relative entropy", "D(U_n) against the entCLT bound", styles=["-o", "--"],
        )
    return runner.EXIT_OK if trace.ok else runner.EXIT_VIOLATION


def cmd_hyper(args) -> int:
    f = gen.load_function(args.function)
    ps, ts = gen.parse_grid(args.p_grid), gen.parse_grid(args.t_grid)
    reports = [hyper.nelson_check(f, p, t) for p in ps for t in ts]
    if not isinstance(f, hyper.LogLinear):
        reports += [hyper.gross_derivative_check(f, p) for p in ps]
    if args.g:
        g = gen.load_function(args.g)
        for p in ps:
            reports += [r for r in hyper.improved_nelson_check(f, g, p, args.theta) if not r.params.get("diagnostic")]
    rows = [{**hyper.to_row(r), "verdict": r.verdict.value} for r in reports]
    _emit(args, "hyper", hyper.CSV_COLUMNS, rows)
    return _status(rows)


def cmd_geom(args) -> int:
    cfg = geometry.SearchConfig(
        dim=args.dim,
        n_pairs=args.pairs,
        k_min=args.k_min or args.dim + 1,
        k_max=args.k_max,
        seed=_seed(args),
        n_worst=args.n_worst,
    )
    res = geometry.search_counterexamples(cfg)
    _emit(args, "geom", geometry.SEARCH_COLUMNS, res.rows)
    summary = res.summary()
    if args.out:
        paths = geometry.write_worst(res, Path(args.out) / "counterexamples")
        summary["worst_files"] = [str(p) for p in paths]
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return runner.EXIT_OK if res.sanity_ok else runner.EXIT_VIOLATION


def aggregate(paths) -> dict:
    """Row and verdict counts per CSV file, plus totals."""
    files, totals = [], {v.value: 0 for v in Verdict}
    total_rows = 0
    for path in paths:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        counts = {v.value: 0 for v in Verdict}
        for r in rows:
            if r.get("verdict") in counts:
                counts[r["verdict"]] += 1
        for k, c in counts.items():
            totals[k] += c
        total_rows += len(rows)
        entry = {"file": str(path), "rows": len(rows), "verdicts": counts}
        if rows and "deficit" in rows[0]:
            vals = [float(r["deficit"]) for r in rows if r["deficit"] not in ("", "nan")]
            entry["min_deficit"] = min(vals) if vals else None
        files.append(entry)
    return {"files": files, "rows": total_rows, "totals": totals}


def cmd_report(args) -> int:
    for p in args.files:
        if not Path(p).is_file():
            raise InvalidConfig(f"no such file: {p}")
    text = json.dumps(aggregate(args.files), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "report.json").write_text(text)
    sys.stdout.write(text)
    return runner.EXIT_OK


def cmd_run(args) -> int:
    if not args.config:
        raise InvalidConfig("run needs --config")
    cfg = load_config(args.config, seed=args.seed, output_dir=args.out)
    status, summary = runner.run(cfg, jobs=max(1, args.jobs))
    totals = summary["totals"]
    print(
        f"{len(summary['suites'])} suites -> {cfg.output_dir}: "
        + ", ".join(f"{k}={totals[k]}" for k in sorted(totals))
    )
    return status


COMMANDS = {
    "eval": cmd_eval,
    "check": cmd_check,
    "clt": cmd_clt,
    "hyper": cmd_hyper,
    "geom": cmd_geom,
    "report": cmd_report,
    "run": cmd_run,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command or ("run" if args.config else None)
    if command is None:
        parser.print_usage(sys.stderr)
        return runner.EXIT_USAGE
    try:
        return COMMANDS[command](args)
    except (DeficitLabError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"deficitlab {command}: error: {msg}", file=sys.stderr)
        return runner.EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
