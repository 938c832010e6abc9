"""Convex polytopes, Minkowski sums and the isoperimetric conjecture probes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import spatial, special

from .errors import InvalidBody, InvalidPair
from .reports import DeficitReport, report

GENERATORS = ("gaussian", "sphere", "anisotropic")
MAX_RETRIES = 10
SANITY_TOL = 1e-9


def ball_volume(d: int) -> float:
    """Volume ω_d of the unit ball in R^d."""
    return float(math.pi ** (d / 2) / special.gamma(d / 2 + 1))


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Convex hull of finitely many points in R^2 or R^3.

    Only hull vertices are kept. Volume and surface measure are computed on
    construction: shoelace and perimeter in 2-d, a fan of tetrahedra from
    the vertex centroid and summed triangle areas in 3-d.
    """

    vertices: np.ndarray
    volume: float = field(init=False)
    surface: float = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise InvalidBody("bodies live in R^2 or R^3")
        if not np.all(np.isfinite(pts)):
            raise InvalidBody("vertices must be finite")
        d = pts.shape[1]
        pts = np.unique(pts, axis=0)
        if pts.shape[0] < d + 1:
            raise InvalidBody("need at least d + 1 distinct points")
        try:
            hull = spatial.ConvexHull(pts)
        except spatial.QhullError as exc:
            raise InvalidBody(f"degenerate hull: {exc.args[0].splitlines()[0]}") from None
        if d == 2:
            v = pts[hull.vertices]  # counter-clockwise
            x, y = v[:, 0], v[:, 1]
            vol = 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
            surf = float(np.linalg.norm(v - np.roll(v, -1, axis=0), axis=1).sum())
        else:
            v = pts[np.sort(hull.vertices)]
            tri = pts[hull.simplices]
            c = v.mean(axis=0)
            vol = float(np.abs(np.linalg.det(tri - c)).sum() / 6.0)
            surf = float(0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1).sum())
        scale = float(np.abs(v - v.mean(axis=0)).max())
        if not vol > 1e-12 * scale**d:
            raise InvalidBody("hull is not full-dimensional")
        v = np.ascontiguousarray(v)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "volume", vol)
        object.__setattr__(self, "surface", surf)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def translated(self, c) -> "ConvexBody":
        return ConvexBody(self.vertices + np.asarray(c, dtype=float))

    def scaled(self, s: float) -> "ConvexBody":
        return ConvexBody(self.vertices * float(s))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "vertices": self.vertices.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ConvexBody":
        body = cls(np.asarray(data["vertices"], dtype=float))
        if "dim" in data and int(data["dim"]) != body.dim:
            raise InvalidBody("declared dim does not match the vertices")
        return body


def vol(A: ConvexBody) -> float:
    return A.volume


def surface(A: ConvexBody) -> float:
    return A.surface


def ball_surface_same_volume(A: ConvexBody) -> float:
    """|∂B_A| = d ω_d^{1/d} Vol(A)^{(d-1)/d}."""
    d = A.dim
    return d * ball_volume(d) ** (1.0 / d) * A.volume ** ((d - 1.0) / d)


def iso_ratio(A: ConvexBody) -> float:
    """|∂A| / |∂B_A| for the ball B_A of equal volume."""
    return A.surface / ball_surface_same_volume(A)


@dataclass(frozen=True)
class IsoReport:
    body_id: str
    volume: float
    surface: float
    ball_surface: float
    ratio: float

    @property
    def ok(self) -> bool:
        return self.ratio >= 1.0 - SANITY_TOL


def iso_report(A: ConvexBody, body_id: str = "") -> IsoReport:
    return IsoReport(body_id, A.volume, A.surface, ball_surface_same_volume(A), iso_ratio(A))


def minkowski_sum(A: ConvexBody, B: ConvexBody) -> ConvexBody:
    """Hull of all pairwise vertex sums (exact for polytopes)."""
    if A.dim != B.dim:
        raise InvalidPair(f"dimension mismatch: {A.dim} vs {B.dim}")
    pts = (A.vertices[:, None, :] + B.vertices[None, :, :]).reshape(-1, A.dim)
    return ConvexBody(pts)


# --------------------------------------------------------------------------
# reference bodies
# --------------------------------------------------------------------------


def box(sides: Sequence[float]) -> ConvexBody:
    sides = np.asarray(sides, dtype=float)
    corners = np.array(np.meshgrid(*[[0.0, 1.0]] * sides.size, indexing="ij")).reshape(sides.size, -1).T
    return ConvexBody(corners * sides)


def ball_polytope(dim: int, n: int, radius: float = 1.0) -> ConvexBody:
    """Inscribed regular n-gon (d = 2) or Fibonacci-sphere polytope (d = 3)."""
    if dim == 2:
        ang = 2 * math.pi * np.arange(n) / n
        return ConvexBody(radius * np.stack([np.cos(ang), np.sin(ang)], axis=1))
    if dim == 3:
        i = np.arange(n) + 0.5
        z = 1 - 2 * i / n
        r = np.sqrt(1 - z * z)
        phi = math.pi * (3 - math.sqrt(5)) * i
        return ConvexBody(radius * np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1))
    raise InvalidBody("dim must be 2 or 3")


def regular_simplex_2d(side: float = 1.0) -> ConvexBody:
    return ConvexBody(side * np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]]))


def random_body(seed: int, dim: int, k: int, generator: str = "gaussian") -> ConvexBody:
    """Hull of ``k`` seeded random points.

    Generators: ``gaussian`` (standard normal cloud), ``sphere`` (uniform on
    the unit sphere) and ``anisotropic`` (normal cloud stretched by seeded
    log-normal axis factors and rotated).
    """
    if dim not in (2, 3):
        raise InvalidBody("dim must be 2 or 3")
    if k < dim + 1:
        raise InvalidBody("need k >= dim + 1")
    if generator not in GENERATORS:
        raise ValueError(f"unknown generator {generator!r}; choose from {GENERATORS}")
    for attempt in range(MAX_RETRIES):
        rng = np.random.default_rng([int(seed) & (2**63 - 1), dim, k, attempt])
        pts = rng.standard_normal((k, dim))
        if generator == "sphere":
            pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        elif generator == "anisotropic":
            stretch = np.exp(rng.normal(0.0, 1.0, dim))
            q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
            pts = (pts * stretch) @ q.T
        try:
            return ConvexBody(pts)
        except InvalidBody:
            continue
    raise InvalidBody(f"no full-dimensional draw after {MAX_RETRIES} attempts")


# --------------------------------------------------------------------------
# inequalities
# --------------------------------------------------------------------------


def brunn_minkowski_deficit(A: ConvexBody, B: ConvexBody, S: ConvexBody | None = None) -> DeficitReport:
    """Vol(A+B)^{1/d} >= Vol(A)^{1/d} + Vol(B)^{1/d}."""
    S = S or minkowski_sum(A, B)
    d = A.dim
    return report("brunn_minkowski", A.volume ** (1 / d) + B.volume ** (1 / d), S.volume ** (1 / d))


def conjecture1_deficit(A: ConvexBody, B: ConvexBody, S: ConvexBody | None = None) -> DeficitReport:
    """Vol(A+B)^{1/d} <= (vA + vB)(λ iso(A) + (1-λ) iso(B)), λ = vB / (vA + vB).

    Reported only; no sign is claimed.
    """
    S = S or minkowski_sum(A, B)
    d = A.dim
    va, vb = A.volume ** (1 / d), B.volume ** (1 / d)
    lam = vb / (va + vb)
    rhs = (va + vb) * (lam * iso_ratio(A) + (1 - lam) * iso_ratio(B))
    return report("conjecture1", S.volume ** (1 / d), rhs, conjecture=True, **{"lambda": lam})


def conjecture2_deficit(A: ConvexBody, B: ConvexBody, S: ConvexBody | None = None) -> DeficitReport:
    """iso(A+B) <= iso(A) iso(B). Reported only; no sign is claimed."""
    S = S or minkowski_sum(A, B)
    return report("conjecture2", iso_ratio(S), iso_ratio(A) * iso_ratio(B), conjecture=True)


# --------------------------------------------------------------------------
# randomized search
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchConfig:
    dim: int = 2
    n_pairs: int = 10_000
    k_min: int | None = None  # defaults to dim + 1
    k_max: int = 12
    generators: tuple[str, ...] = GENERATORS
    seed: int = 0
    n_worst: int = 5

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.k_min is None:
            object.__setattr__(self, "k_min", self.dim + 1)
        if self.k_min < self.dim + 1 or self.k_max < self.k_min:
            raise ValueError("need dim + 1 <= k_min <= k_max")
        if self.n_pairs < 0 or self.n_worst < 0:
            raise ValueError("counts must be nonnegative")
        bad = set(self.generators) - set(GENERATORS)
        if bad or not self.generators:
            raise ValueError(f"unknown generators {sorted(bad)}")


SEARCH_COLUMNS = ("seedA", "seedB", "dim", "conj1_deficit", "conj2_deficit")


@dataclass
class SearchResult:
    config: SearchConfig
    rows: list[dict]
    bm_min: float
    iso_min: float
    worst: dict[str, list[dict]]

    @property
    def sanity_ok(self) -> bool:
        return self.bm_min >= -SANITY_TOL and self.iso_min >= 1.0 - SANITY_TOL

    def summary(self) -> dict:
        c1 = np.array([r["conj1_deficit"] for r in self.rows])
        c2 = np.array([r["conj2_deficit"] for r in self.rows])

        def stats(x):
            if x.size == 0:
                return {"n": 0}
            return {"n": int(x.size), "min": float(x.min()), "negative": int((x < 0).sum())}

        return {
            "dim": self.config.dim,
            "pairs": len(self.rows),
            "brunn_minkowski_min_deficit": self.bm_min,
            "iso_ratio_min": self.iso_min,
            "conjecture1": stats(c1),
            "conjecture2": stats(c2),
        }


def pair_seeds(master_seed: int, n_pairs: int, dim: int) -> np.ndarray:
    ss = np.random.SeedSequence([int(master_seed) & (2**63 - 1), 0x6E0, dim])
    return ss.generate_state(2 * n_pairs, dtype=np.uint64).reshape(n_pairs, 2) >> np.uint64(1)


def body_for_seed(seed: int, cfg: SearchConfig) -> ConvexBody:
    span = cfg.k_max - cfg.k_min + 1
    k = cfg.k_min + int(seed % span)
    gen = cfg.generators[int(seed // span) % len(cfg.generators)]
    return random_body(int(seed), cfg.dim, k, gen)


def evaluate_pair(seed_a: int, seed_b: int, cfg: SearchConfig) -> dict:
    A, B = body_for_seed(seed_a, cfg), body_for_seed(seed_b, cfg)
    S = minkowski_sum(A, B)
    return {
        "seedA": int(seed_a),
        "seedB": int(seed_b),
        "dim": cfg.dim,
        "conj1_deficit": conjecture1_deficit(A, B, S).deficit,
        "conj2_deficit": conjecture2_deficit(A, B, S).deficit,
        "bm_deficit": brunn_minkowski_deficit(A, B, S).deficit,
        "iso_min": min(iso_ratio(A), iso_ratio(B), iso_ratio(S)),
    }


def search_counterexamples(cfg: SearchConfig, seeds: np.ndarray | None = None) -> SearchResult:
    """Evaluate seeded random pairs and keep the most negative conjecture deficits."""
    seeds = pair_seeds(cfg.seed, cfg.n_pairs, cfg.dim) if seeds is None else seeds
    rows, bm_min, iso_min = [], math.inf, math.inf
    for sa, sb in seeds:
        r = evaluate_pair(int(sa), int(sb), cfg)
        bm_min = min(bm_min, r.pop("bm_deficit"))
        iso_min = min(iso_min, r.pop("iso_min"))
        rows.append(r)
    worst = {}
    for key in ("conj1_deficit", "conj2_deficit"):
        order = sorted(rows, key=lambda r: (r[key], r["seedA"], r["seedB"]))[: cfg.n_worst]
        worst[key] = order
    return SearchResult(cfg, rows, bm_min, iso_min, worst)


def write_worst(result: SearchResult, out_dir: Path) -> list[Path]:
    """Persist the worst pairs (with full vertex data) as JSON files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    cfg = result.config
    for key, rows in result.worst.items():
        for rank, r in enumerate(rows):
            A, B = body_for_seed(r["seedA"], cfg), body_for_seed(r["seedB"], cfg)
            path = out_dir / f"{key.split('_')[0]}_d{cfg.dim}_{rank:02d}.json"
            payload = {**r, "A": A.to_dict(), "B": B.to_dict()}
            path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
            paths.append(path)
    return paths
