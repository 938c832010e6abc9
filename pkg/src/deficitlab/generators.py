"""Seeded random densities, named reference densities and test functions."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import density as dens
from . import hyper
from .clt import bimodal_unit_variance
from .density import GaussianMixture


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & (2**63 - 1), *stream])


def random_cov(rng: np.random.Generator, d: int, floor: float = 0.1) -> np.ndarray:
    A = rng.normal(size=(d, d))
    return A @ A.T / d + floor * np.eye(d)


def random_gaussian(rng: np.random.Generator, d: int, centered: bool = False) -> GaussianMixture:
    mean = np.zeros(d) if centered else rng.normal(size=d)
    return dens.gaussian(mean, random_cov(rng, d))


def random_mixture(rng: np.random.Generator, d: int, k: int | None = None) -> GaussianMixture:
    """Centered mixture with 2-3 well-conditioned components."""
    k = k or int(rng.integers(2, 4))
    w = rng.dirichlet(np.full(k, 2.0))
    means = rng.normal(scale=1.5, size=(k, d))
    covs = np.stack([random_cov(rng, d, floor=0.2) for _ in range(k)])
    return dens.center(GaussianMixture(w, means, covs))


def gaussian_pairs(seed: int, n: int, dims=(1, 2, 3)):
    """n centered Gaussian pairs, dimension cycling through ``dims``."""
    out = []
    for i in range(n):
        rng = rng_for(seed, 1, i)
        d = dims[i % len(dims)]
        out.append((random_gaussian(rng, d, centered=True), random_gaussian(rng, d, centered=True)))
    return out


def mixture_pairs(seed: int, n: int, dims=(1, 2)):
    out = []
    for i in range(n):
        rng = rng_for(seed, 2, i)
        d = dims[i % len(dims)]
        out.append((random_mixture(rng, d), random_mixture(rng, d)))
    return out


def rho_pair(rho: float = 0.5):
    """The correlated pair N(0, [[1, ρ], [ρ, 1]]), N(0, [[1, -ρ], [-ρ, 1]])."""
    return (
        dens.gaussian(np.zeros(2), np.array([[1.0, rho], [rho, 1.0]])),
        dens.gaussian(np.zeros(2), np.array([[1.0, -rho], [-rho, 1.0]])),
    )


def _named():
    out = {f"std-gaussian-{d}d": (lambda d=d: dens.standard_gaussian(d)) for d in (1, 2, 3)}
    out.update(
        {
            "gaussian-var2-1d": lambda: dens.gaussian([0.0], 2.0),
            "gaussian-var-half-1d": lambda: dens.gaussian([0.0], 0.5),
            "bimodal-1d": bimodal_unit_variance,
            "wide-bimodal-1d": lambda: bimodal_unit_variance(2.0, 0.5),
            "skewed-mixture-1d": lambda: dens.center(dens.mixture([0.7, 0.3], [[0.0], [2.0]], [1.0, 0.25])),
            "rho-plus-2d": lambda: rho_pair()[0],
            "rho-minus-2d": lambda: rho_pair()[1],
            "trimodal-2d": lambda: dens.center(
                dens.mixture([0.4, 0.3, 0.3], [[0.0, 1.0], [1.0, -1.0], [-1.0, -1.0]], [0.5, 0.4, 0.6])
            ),
        }
    )
    return out


NAMED_DENSITIES = _named()


def load_density(spec: str):
    """A named density or a JSON file written by :func:`density.dumps`."""
    if spec in NAMED_DENSITIES:
        return NAMED_DENSITIES[spec]()
    path = Path(spec)
    if path.is_file():
        return dens.loads(path.read_text())
    raise KeyError(f"unknown density {spec!r}; choose one of {sorted(NAMED_DENSITIES)} or a JSON file")


def load_function(spec: str):
    """Test functions: ``loglinear:<a>``, ``bump:<center>,<height>,<width>[,<floor>]`` or ``sinexp:<freq>``."""
    kind, _, arg = spec.partition(":")
    vals = [float(v) for v in arg.split(",")] if arg else []
    if kind == "loglinear":
        return hyper.LogLinear(vals or [1.0])
    if kind == "bump":
        return hyper.GridFn.from_function(hyper.bump(*vals))
    if kind == "sinexp":
        freq = vals[0] if vals else 1.0
        return hyper.GridFn.from_function(lambda x: np.exp(0.5 * np.sin(freq * x)))
    raise KeyError(f"unknown test function {spec!r}")


def density_json(X) -> str:
    return json.dumps(dens.to_dict(X), sort_keys=True)


def parse_grid(text: str) -> list[float]:
    """``a:b:step`` (inclusive) or a comma-separated list."""
    if ":" in text:
        a, b, step = (float(v) for v in text.split(":"))
        if not step > 0 or b < a:
            raise ValueError(f"bad grid {text!r}")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return [round(a + i * step, 12) for i in range(n)]
    return [float(v) for v in text.split(",") if v.strip()]
