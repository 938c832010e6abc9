"""Suite execution: planning, (parallel) evaluation, deterministic merge, artifacts.

Each suite is split into tasks whose payloads are plain data; a task is a
pure function of its payload, so results do not depend on which process ran
it. Tasks are merged by (suite index, task index).
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import clt, geometry, hyper, inequalities, transport
from . import density as dens
from . import functionals as fn
from . import generators as gen
from .config import RunConfig, SuiteSpec
from .plots import line_chart
from .reports import DeficitReport, Verdict, classify

VERDICTS = tuple(v.value for v in Verdict)
EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


# --------------------------------------------------------------------------
# formatting
# --------------------------------------------------------------------------


def fmt(v) -> str:
    """Shortest round-trip text for floats; blanks for None."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


# --------------------------------------------------------------------------
# task plumbing
# --------------------------------------------------------------------------


@dataclass
class TaskOutput:
    tables: dict[str, list[dict]] = field(default_factory=dict)
    verdicts: list[tuple[str, bool]] = field(default_factory=list)  # (verdict, asserted)

    def add(self, table: str, row: dict, verdict: str | None = None, asserted: bool = True):
        self.tables.setdefault(table, []).append(row)
        if verdict is not None:
            self.verdicts.append((verdict, asserted))


def _settings(spec: dict, seed: int) -> fn.EstimatorSettings:
    s = spec.get("settings", {})
    return fn.EstimatorSettings(
        method=s.get("method"),
        quad_tol=float(s.get("quad_tol", 1e-8)),
        mc_samples=int(s.get("mc_samples", fn.DEFAULT_SETTINGS.mc_samples)),
        seed=int(s.get("seed", seed % 2**32)),
    )


def _verdict(r: DeficitReport, spec: dict) -> str:
    return classify(r.deficit, r.err, spec["sigmas"], spec["abs_tol"]).value


def _report_row(r: DeficitReport, spec: dict, **prefix) -> dict:
    return {
        **prefix,
        "name": r.name,
        "theta": r.params.get("theta", ""),
        "lambda": r.params.get("lambda", ""),
        "t": r.params.get("t", ""),
        "lhs": r.lhs.value,
        "rhs": r.rhs.value,
        "deficit": r.deficit,
        "err": r.err,
        "verdict": _verdict(r, spec),
    }


def _density_items(params: dict, seed: int) -> list:
    """Descriptors of single densities: ("named", name) or (kind, seed, index, dim)."""
    src = params.get("densities", {"kind": "named", "names": ["bimodal-1d"]})
    if src["kind"] == "named":
        return [("named", n) for n in src["names"]]
    dims = src.get("dims", [1, 2])
    return [(src["kind"], seed, i, dims[i % len(dims)]) for i in range(int(src.get("n", 10)))]


def _make_density(item):
    if item[0] == "named":
        return gen.load_density(item[1])
    kind, seed, i, d = item
    rng = gen.rng_for(seed, 3, i)
    if kind == "gaussian":
        return gen.random_gaussian(rng, d, centered=True)
    if kind == "mixture":
        return gen.random_mixture(rng, d)
    raise KeyError(f"unknown density generator {kind!r}")


def _item_id(item) -> str:
    return item[1] if item[0] == "named" else f"{item[0]}-{item[2]}"


def _pair_items(params: dict, seed: int) -> list:
    src = params.get("pairs", {"kind": "gaussian", "n": 10})
    if src["kind"] == "named":
        return [("named", a, b) for a, b in src["names"]]
    dims = src.get("dims", [1, 2, 3] if src["kind"] == "gaussian" else [1, 2])
    return [(src["kind"], seed, i, dims[i % len(dims)]) for i in range(int(src.get("n", 10)))]


def _make_pair(item):
    if item[0] == "named":
        return gen.load_density(item[1]), gen.load_density(item[2])
    kind, seed, i, d = item
    rng = gen.rng_for(seed, 4, i)
    if kind == "gaussian":
        return gen.random_gaussian(rng, d, centered=True), gen.random_gaussian(rng, d, centered=True)
    if kind == "mixture":
        return gen.random_mixture(rng, d), gen.random_mixture(rng, d)
    raise KeyError(f"unknown pair generator {kind!r}")


def _pair_id(item) -> str:
    return f"{item[1]}+{item[2]}" if item[0] == "named" else f"{item[0]}-{item[2]}"


def _chunks(items: list, size: int) -> list[list]:
    return [items[i : i + size] for i in range(0, len(items), size)] or [[]]


# --------------------------------------------------------------------------
# suite kinds
# --------------------------------------------------------------------------


def _plan_functionals(spec, seed):
    return [{"items": c} for c in _chunks(_density_items(spec["params"], seed), 10)]


def _run_functionals(spec, seed, task) -> TaskOutput:
    out = TaskOutput()
    st = _settings(spec, seed)
    for item in task["items"]:
        X = _make_density(item)
        rec = fn.catalog(X, st).to_record()
        out.add("main", {"id": _item_id(item), "dim": X.dim, **rec})
    return out


def _plan_inequalities(spec, seed):
    return [{"items": c} for c in _chunks(_pair_items(spec["params"], seed), 4)]


def _run_inequalities(spec, seed, task) -> TaskOutput:
    out = TaskOutput()
    p = spec["params"]
    names = p.get("inequalities", ["all"])
    names = list(inequalities.NAMES) if "all" in names else names
    thetas = p.get("theta_grid", list(inequalities.DEFAULT_THETA_GRID))
    ts = p.get("t_grid", list(inequalities.DEFAULT_T_GRID))
    st = _settings(spec, seed)
    for item in task["items"]:
        X, Y = _make_pair(item)
        for name in names:
            for r in inequalities.evaluate(name, X, Y, thetas, ts, st):
                out.add("main", _report_row(r, spec, pair=_pair_id(item)), _verdict(r, spec))
    return out


def _entropic(params: dict, seed: int) -> transport.EntropicSettings:
    e = params.get("entropic", {})
    return transport.EntropicSettings(
        n=int(e.get("n", 512)), reps=int(e.get("reps", 8)), seed=int(e.get("seed", seed % 2**32))
    )


def _plan_transport(spec, seed):
    return [{"items": c} for c in _chunks(_density_items(spec["params"], seed), 4)]


def _run_transport(spec, seed, task) -> TaskOutput:
    out = TaskOutput()
    p = spec["params"]
    st, ent = _settings(spec, seed), _entropic(p, seed)
    checks = p.get("checks", ["talagrand", "hwi"])
    for item in task["items"]:
        X = _make_density(item)
        for check in checks:
            r = {"talagrand": transport.talagrand_deficit, "hwi": transport.hwi_deficit}[check](X, st, ent)
            row = _report_row(r, spec, id=_item_id(item))
            row["w2_method"] = transport.w2_to_gaussian(X, ent).method.value
            out.add("main", row, row["verdict"])
    return out


def _run_stability(spec, seed, task) -> TaskOutput:
    out = TaskOutput()
    st, ent = _settings(spec, seed), _entropic(spec["params"], seed)
    for item in task["items"]:
        rep = inequalities.hwi_jump_check(_make_density(item), st, ent)
        verdict = classify(rep.deficit, rep.err, spec["sigmas"], spec["abs_tol"]).value
        row = {"id": _item_id(item), **rep.to_record(), "vacuous": rep.vacuous, "verdict": verdict}
        out.add("main", row, verdict)
    return out


def _plan_single(spec, seed):
    return [{}]


def _run_clt(spec, seed, task) -> TaskOutput:
    out = TaskOutput()
    p = spec["params"]
    Z = gen.load_density(p.get("density", "bimodal-1d"))
    st = _settings(spec, seed)
    budget = int(p.get("budget", dens.DEFAULT_BUDGET))
    trace = clt.clt_trace(Z, int(p.get("n_max", 16)), st, budget=budget)
    for row in trace.rows:
        rec = row.to_record()
        rec["entCLT_bound"] = row.ent_clt.lhs.value
        out.add("main", rec)
        for r in (row.ent_clt, row.fi_clt, row.doubling):
            out.verdicts.append((_verdict(r, spec), True))
    for r in clt.subadditivity_check(Z, clt.all_pairs(int(p.get("subadditivity_total", 8))), st, budget=budget):
        row = {"m": r.params["m"], "n": r.params["n"], "lhs": r.lhs.value, "rhs": r.rhs.value,
               "deficit": r.deficit, "err": r.err, "verdict": _verdict(r, spec)}
        out.add("subadditivity", row, row["verdict"])
    return out


def _plan_hyper(spec, seed):
    p = spec["params"]
    tasks = [{"part": "loglinear"}]
    tasks += [{"part": "grid", "fn": f} for f in p.get("functions", [])]
    tasks += [{"part": "pair", "f": f, "g": g} for f, g in p.get("pairs", [])]
    return tasks


def _hyper_row(r: DeficitReport, spec: dict, check: str, function: str) -> dict:
    return {"check": check, "function": function, **hyper.to_row(r), "err": r.err, "verdict": _verdict(r, spec)}


def _run_hyper(spec, seed, task) -> TaskOutput:
    out = TaskOutput()
    p = spec["params"]
    st = _settings(spec, seed)
    ps = p.get("p_grid", [1.5, 2.0, 4.0])
    ts = p.get("t_grid", [0.1, 0.25, 0.5, 1.0])
    if task["part"] == "loglinear":
        for a in p.get("a_grid", [0.25, 0.5, 1.0, 2.0]):
            f = hyper.LogLinear([a])
            for pp in ps:
                for t in ts:
                    r = hyper.nelson_check(f, pp, t)
                    row = _hyper_row(r, spec, "nelson", f"loglinear:{a}")
                    out.add("main", row, row["verdict"])
    elif task["part"] == "grid":
        f = gen.load_function(task["fn"])
        for pp in ps:
            for t in ts:
                r = hyper.nelson_check(f, pp, t)
                row = _hyper_row(r, spec, "nelson", task["fn"])
                out.add("main", row, row["verdict"])
            r = hyper.gross_derivative_check(f, pp, st)
            row = _hyper_row(r, spec, "gross_derivative", task["fn"])
            out.add("main", row, row["verdict"])
    else:
        f, g = gen.load_function(task["f"]), gen.load_function(task["g"])
        for pp in ps:
            for th in p.get("theta_grid", [0.5]):
                reps = hyper.improved_nelson_check(f, g, pp, th, p.get("diag_t_grid", [0.01, 0.05]), st)
                for r in reps:
                    diag = bool(r.params.get("diagnostic"))
                    row = _hyper_row(r, spec, "improved_nelson" + ("_t" if diag else ""), f"{task['f']}|{task['g']}")
                    out.add("main", row, row["verdict"], asserted=not diag)
    return out


def _search_cfg(p: dict, seed: int) -> geometry.SearchConfig:
    dim = int(p.get("dim", 2))
    return geometry.SearchConfig(
        dim=dim,
        n_pairs=int(p.get("n_pairs", 1000)),
        k_min=int(p.get("k_min", dim + 1)),
        k_max=int(p.get("k_max", 12)),
        generators=tuple(p.get("generators", geometry.GENERATORS)),
        seed=seed,
        n_worst=int(p.get("n_worst", 5)),
    )


def _plan_geometry(spec, seed):
    cfg = _search_cfg(spec["params"], seed)
    n, size = cfg.n_pairs, 500
    return [{"lo": lo, "hi": min(lo + size, n)} for lo in range(0, max(n, 1), size)]


def _run_geometry(spec, seed, task) -> TaskOutput:
    out = TaskOutput()
    cfg = _search_cfg(spec["params"], seed)
    seeds = geometry.pair_seeds(cfg.seed, cfg.n_pairs, cfg.dim)[task["lo"] : task["hi"]]
    for sa, sb in seeds:
        r = geometry.evaluate_pair(int(sa), int(sb), cfg)
        bm, iso = r.pop("bm_deficit"), r.pop("iso_min")
        out.add("main", r)
        out.add("sanity", {"seedA": r["seedA"], "seedB": r["seedB"], "bm_deficit": bm, "iso_min": iso})
        # sanity oracles are classical theorems: asserted even in this suite
        out.verdicts.append(("violated" if bm < -geometry.SANITY_TOL else "holds", True))
        out.verdicts.append(("violated" if iso < 1 - geometry.SANITY_TOL else "holds", True))
        for key in ("conj1_deficit", "conj2_deficit"):
            out.verdicts.append(("holds" if r[key] >= 0 else "violated", False))
    return out


SuiteImpl = tuple[Callable, Callable, tuple[str, ...]]

KINDS: dict[str, SuiteImpl] = {
    "functionals": (_plan_functionals, _run_functionals, ()),
    "inequalities": (
        _plan_inequalities,
        _run_inequalities,
        ("pair", "name", "theta", "lambda", "t", "lhs", "rhs", "deficit", "err", "verdict"),
    ),
    "transport": (
        _plan_transport,
        _run_transport,
        ("id", "name", "lhs", "rhs", "deficit", "err", "verdict", "w2_method"),
    ),
    "stability": (
        _plan_transport,
        _run_stability,
        ("id", "eps_entropy", "eps_wasserstein", "eps_fisher", "eps", "lsi_deficit", "bound", "deficit", "err",
         "vacuous", "verdict"),
    ),
    "clt": (_plan_single, _run_clt, clt.CSV_COLUMNS),
    "hyper": (_plan_hyper, _run_hyper, ("check", "function") + hyper.CSV_COLUMNS + ("err", "verdict")),
    "geometry": (_plan_geometry, _run_geometry, geometry.SEARCH_COLUMNS),
}

_TABLE_COLUMNS = {
    ("clt", "subadditivity"): ("m", "n", "lhs", "rhs", "deficit", "err", "verdict"),
    ("geometry", "sanity"): ("seedA", "seedB", "bm_deficit", "iso_min"),
}


def execute_task(payload: dict) -> TaskOutput:
    spec = payload["spec"]
    _, run, _ = KINDS[spec["kind"]]
    return run(spec, payload["seed"], payload["task"])


def _spec_dict(s: SuiteSpec) -> dict:
    return {"name": s.name, "kind": s.kind, "params": s.params, "sigmas": s.sigmas, "abs_tol": s.abs_tol,
            "settings": s.settings}


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------


@dataclass
class SuiteResult:
    spec: SuiteSpec
    seed: int
    tables: dict[str, list[dict]]
    asserted: dict[str, int]
    conjecture: dict[str, int]
    files: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def violated(self) -> int:
        return self.asserted["violated"]


def _counts(verdicts, asserted: bool) -> dict[str, int]:
    c = {v: 0 for v in VERDICTS}
    for v, a in verdicts:
        if a == asserted:
            c[v] += 1
    return c


def run_suites(cfg: RunConfig, jobs: int = 1) -> list[SuiteResult]:
    seeds = cfg.suite_seeds()
    payloads, owners = [], []
    for i, (suite, seed) in enumerate(zip(cfg.suites, seeds)):
        spec = _spec_dict(suite)
        plan, _, _ = KINDS[suite.kind]
        for task in plan(spec, seed):
            payloads.append({"spec": spec, "seed": seed, "task": task})
            owners.append(i)
    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(execute_task, payloads))
    else:
        outputs = [execute_task(p) for p in payloads]
    results = []
    for i, (suite, seed) in enumerate(zip(cfg.suites, seeds)):
        tables: dict[str, list[dict]] = {}
        verdicts: list = []
        for owner, o in zip(owners, outputs):
            if owner != i:
                continue
            for name, rows in o.tables.items():
                tables.setdefault(name, []).extend(rows)
            verdicts.extend(o.verdicts)
        results.append(SuiteResult(suite, seed, tables, _counts(verdicts, True), _counts(verdicts, False)))
    return results


def _columns(kind: str, table: str, rows: list[dict]) -> tuple[str, ...]:
    if table == "main" and KINDS[kind][2]:
        return KINDS[kind][2]
    if (kind, table) in _TABLE_COLUMNS:
        return _TABLE_COLUMNS[(kind, table)]
    cols: list[str] = []
    for r in rows:
        cols.extend(c for c in r if c not in cols)
    return tuple(cols)


def _plot(res: SuiteResult, out: Path) -> list[Path]:
    kind, rows = res.spec.kind, res.tables.get("main", [])
    name = res.spec.name
    if kind == "inequalities":
        series = {}
        for r in rows:
            if r["theta"] == "" or r["name"] not in inequalities.THETA_FAMILY:
                continue
            series.setdefault((r["pair"], r["name"]), []).append((r["theta"], r["deficit"]))
        keys = sorted(series)[:12]
        data = [(f"{k[1]} [{k[0]}]", *zip(*sorted(series[k]))) for k in keys]
        if data:
            return [line_chart(out / f"{name}.svg", data, "theta", "deficit", "deficit vs theta")]
    if kind == "clt" and rows:
        n = [r["n"] for r in rows]
        data = [("D(U_n)", n, [r["D"] for r in rows]), ("entCLT lower bound", n, [r["entCLT_bound"] for r in rows])]
        return [line_chart(out / f"{name}.svg", data, "n", "relative entropy", "D(U_n) against the entCLT bound",
                           styles=["-o", "--"])]
    if kind == "hyper":
        series = {}
        for r in rows:
            if r["check"] == "nelson" and r["rhs_norm"]:
                series.setdefault((r["function"], r["p"]), []).append((r["t"], r["lhs_norm"] / r["rhs_norm"]))
        keys = sorted(series, key=lambda k: (str(k[0]), k[1]))[:12]
        data = [(f"{k[0]}, p={k[1]}", *zip(*sorted(series[k]))) for k in keys]
        if data:
            return [line_chart(out / f"{name}.svg", data, "t", "||P_t f||_q / ||f||_p", "norm ratio vs t")]
    return []


def write_artifacts(cfg: RunConfig, results: list[SuiteResult], out: Path | None = None) -> dict:
    out = Path(out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    suites = []
    for res in results:
        files = []
        for table, rows in sorted(res.tables.items(), key=lambda kv: (kv[0] != "main", kv[0])):
            fname = f"{res.spec.name}.csv" if table == "main" else f"{res.spec.name}_{table}.csv"
            cols = _columns(res.spec.kind, table, rows)
            (out / fname).write_text(csv_text(cols, rows))
            files.append(fname)
        files += [p.name for p in _plot(res, out)]
        entry = {
            "name": res.spec.name,
            "kind": res.spec.kind,
            "seed": res.seed,
            "rows": len(res.tables.get("main", [])),
            "asserted": res.asserted,
            "conjecture": res.conjecture,
            "files": files,
        }
        if res.spec.kind == "geometry":
            entry["geometry"] = _geometry_summary(cfg, res, out)
        suites.append(entry)
    violated = sum(r.violated for r in results)
    summary = {
        "schema": cfg.schema,
        "master_seed": cfg.master_seed,
        "suites": suites,
        "totals": {v: sum(r.asserted[v] for r in results) for v in VERDICTS},
        "exit_status": EXIT_VIOLATION if violated else EXIT_OK,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _geometry_summary(cfg: RunConfig, res: SuiteResult, out: Path) -> dict:
    scfg = _search_cfg(res.spec.params, res.seed)
    rows = res.tables.get("main", [])
    sanity = res.tables.get("sanity", [])
    result = geometry.SearchResult(
        scfg,
        rows,
        min((s["bm_deficit"] for s in sanity), default=math.inf),
        min((s["iso_min"] for s in sanity), default=math.inf),
        {
            key: sorted(rows, key=lambda r: (r[key], r["seedA"], r["seedB"]))[: scfg.n_worst]
            for key in ("conj1_deficit", "conj2_deficit")
        },
    )
    paths = geometry.write_worst(result, out / "counterexamples" / res.spec.name)
    summary = result.summary()
    summary["worst_files"] = [str(p.relative_to(out)) for p in paths]
    return summary


def run(cfg: RunConfig, jobs: int = 1, out: Path | None = None) -> tuple[int, dict]:
    """Execute every suite and write artifacts; returns (exit status, summary)."""
    results = run_suites(cfg, jobs)
    summary = write_artifacts(cfg, results, out)
    return summary["exit_status"], summary
