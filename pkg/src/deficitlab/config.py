"""Run configuration: a versioned JSON document naming suites and a master seed."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InvalidConfig
from .inequalities import NAMES

SCHEMA = "deficitlab.run/1"
SEED_ENV = "DEFICITLAB_SEED"

# operation kinds a suite may name, and whether its verdicts are asserted
SUITE_KINDS = {
    "functionals": True,
    "inequalities": True,
    "transport": True,
    "stability": True,
    "clt": True,
    "hyper": True,
    "geometry": False,  # conjecture suite; only its sanity oracles are asserted
}

INEQUALITIES = NAMES


@dataclass(frozen=True)
class SuiteSpec:
    name: str
    kind: str
    params: dict = field(default_factory=dict)
    sigmas: float = 3.0
    abs_tol: float = 1e-9
    settings: dict = field(default_factory=dict)

    @property
    def asserted(self) -> bool:
        return SUITE_KINDS[self.kind]


@dataclass(frozen=True)
class RunConfig:
    master_seed: int
    suites: tuple[SuiteSpec, ...] = ()
    output_dir: str = "out"
    schema: str = SCHEMA

    def with_overrides(self, seed: int | None = None, output_dir: str | None = None) -> "RunConfig":
        return RunConfig(
            master_seed=self.master_seed if seed is None else _check_seed(seed),
            suites=self.suites,
            output_dir=self.output_dir if output_dir is None else str(output_dir),
            schema=self.schema,
        )

    def suite_seeds(self) -> list[int]:
        """Independent per-suite seeds; suite i always gets the same one."""
        children = np.random.SeedSequence(self.master_seed).spawn(len(self.suites))
        return [int(c.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)) for c in children]

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "suites": [
                {
                    "name": s.name,
                    "kind": s.kind,
                    "params": s.params,
                    "sigmas": s.sigmas,
                    "abs_tol": s.abs_tol,
                    "settings": s.settings,
                }
                for s in self.suites
            ],
        }


def _check_seed(value: Any) -> int:
    if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
        raise InvalidConfig(f"master_seed must be an integer, got {value!r}")
    try:
        seed = int(value)
    except (TypeError, ValueError):
        raise InvalidConfig(f"master_seed must be an integer, got {value!r}") from None
    if not 0 <= seed < 2**64:
        raise InvalidConfig("master_seed must fit in an unsigned 64-bit integer")
    return seed


_SETTINGS_KEYS = {"method", "quad_tol", "mc_samples", "seed"}


def _parse_suite(i: int, doc: Any, problems: list[str]) -> SuiteSpec | None:
    where = f"suites[{i}]"
    if not isinstance(doc, dict):
        problems.append(f"{where}: expected an object")
        return None
    unknown = set(doc) - {"name", "kind", "params", "sigmas", "abs_tol", "settings"}
    if unknown:
        problems.append(f"{where}: unknown keys {sorted(unknown)}")
    kind = doc.get("kind")
    if kind not in SUITE_KINDS:
        problems.append(f"{where}: kind must be one of {sorted(SUITE_KINDS)}, got {kind!r}")
        return None
    name = doc.get("name", f"{kind}_{i}")
    if not isinstance(name, str) or not name or any(c in name for c in "/\\ "):
        problems.append(f"{where}: name must be a nonempty identifier without spaces or slashes")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        problems.append(f"{where}: params must be an object")
        params = {}
    sigmas, abs_tol = doc.get("sigmas", 3.0), doc.get("abs_tol", 1e-9)
    for key, val in (("sigmas", sigmas), ("abs_tol", abs_tol)):
        if not isinstance(val, (int, float)) or isinstance(val, bool) or not val > 0:
            problems.append(f"{where}: {key} must be a positive number, got {val!r}")
    settings = doc.get("settings", {})
    if not isinstance(settings, dict) or set(settings) - _SETTINGS_KEYS:
        problems.append(f"{where}: settings may only contain {sorted(_SETTINGS_KEYS)}")
        settings = {}
    tol = settings.get("quad_tol")
    if tol is not None and not (isinstance(tol, (int, float)) and tol > 0):
        problems.append(f"{where}: settings.quad_tol must be positive")
    if kind == "inequalities":
        names = params.get("inequalities", ["all"])
        bad = [n for n in names if n != "all" and n not in INEQUALITIES]
        if bad:
            problems.append(f"{where}: unknown inequalities {bad}")
    for key in ("theta_grid", "t_grid", "p_grid"):
        grid = params.get(key)
        if grid is not None and (not isinstance(grid, list) or not all(isinstance(v, (int, float)) for v in grid)):
            problems.append(f"{where}: params.{key} must be a list of numbers")
    if "theta_grid" in params and isinstance(params["theta_grid"], list):
        if any(not 0 <= v <= 1 for v in params["theta_grid"] if isinstance(v, (int, float))):
            problems.append(f"{where}: theta values must lie in [0, 1]")
    return SuiteSpec(name, kind, params, float(sigmas) if isinstance(sigmas, (int, float)) else 3.0,
                     float(abs_tol) if isinstance(abs_tol, (int, float)) else 1e-9, settings)


def parse_config(doc: Any) -> RunConfig:
    """Validate a decoded JSON document; raises InvalidConfig listing every problem."""
    problems: list[str] = []
    if not isinstance(doc, dict):
        raise InvalidConfig("config must be a JSON object")
    unknown = set(doc) - {"schema", "master_seed", "suites", "output_dir"}
    if unknown:
        problems.append(f"unknown top-level keys {sorted(unknown)}")
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        problems.append(f"schema must be {SCHEMA!r}, got {schema!r}")
    if "master_seed" not in doc:
        problems.append("master_seed is required")
    suites_doc = doc.get("suites", [])
    if not isinstance(suites_doc, list):
        problems.append("suites must be a list")
        suites_doc = []
    suites = [_parse_suite(i, s, problems) for i, s in enumerate(suites_doc)]
    names = [s.name for s in suites if s is not None]
    if len(set(names)) != len(names):
        problems.append("suite names must be unique")
    out = doc.get("output_dir", "out")
    if not isinstance(out, str) or not out:
        problems.append("output_dir must be a nonempty string")
    if problems:
        raise InvalidConfig("; ".join(problems))
    seed = _check_seed(doc["master_seed"])
    return RunConfig(seed, tuple(suites), out, schema)


def load_config(path: str | os.PathLike, seed: int | None = None, output_dir: str | None = None) -> RunConfig:
    """Read, validate and apply overrides (explicit seed, then DEFICITLAB_SEED)."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"config {path} is not valid JSON: {exc}") from None
    cfg = parse_config(doc)
    if seed is None and os.environ.get(SEED_ENV):
        seed = os.environ[SEED_ENV]
    return cfg.with_overrides(seed=seed, output_dir=output_dir)
