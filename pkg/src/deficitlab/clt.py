"""Normalized sums U_n = n^{-1/2} (Z_1 + ... + Z_n) and the short-time CLT bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import density as dens
from . import functionals as fn
from .density import Density, GaussianMixture, GridDensity
from .errors import BudgetExceeded, InvalidDimension, PreconditionViolated, UnsupportedEstimator
from .functionals import Estimate, EstimatorSettings
from .reports import DeficitReport, report

GRID_POINTS = 2**14

CSV_COLUMNS = ("n", "D", "I", "dLSI", "entCLT_deficit", "fiCLT_deficit", "doubling_deficit")


def bimodal_unit_variance(separation: float = 1.0, var: float = 0.25) -> GaussianMixture:
    """½N(-a, v) + ½N(a, v) rescaled to unit variance."""
    Z = dens.mixture([0.5, 0.5], [[-separation], [separation]], [var, var])
    return dens.scale(Z, 1.0 / math.sqrt(separation**2 + var))


class SumChain:
    """Memoized laws of U_n for a fixed base Z.

    U_{2^k} comes from repeated θ = ½ self-convolution and general n from the
    binary expansion, combining U_m and U_p at θ = m/(m+p). Mixtures stay
    exact while the merged component count fits ``budget``; afterwards the
    chain moves to an FFT grid with at most ``grid_points`` nodes per axis.
    """

    def __init__(self, Z: Density, budget: int = dens.DEFAULT_BUDGET, grid_points: int = GRID_POINTS):
        if not isinstance(Z, (GaussianMixture, GridDensity)):
            raise UnsupportedEstimator("normalized sums need a mixture or grid density")
        if not dens.is_centered(Z):
            raise PreconditionViolated("normalized sums require a centered Z")
        self.base = Z
        self.budget = budget
        self.grid_points = grid_points
        self._cache: dict[int, Density] = {1: Z}
        self._grid_base: GridDensity | None = None

    def _grid(self, X: Density) -> GridDensity:
        if isinstance(X, GridDensity):
            return X
        if X.dim > 2:
            raise UnsupportedEstimator("component budget exceeded and d > 2: no grid fallback")
        sd = math.sqrt(float(np.linalg.eigvalsh(dens.moments(X)[1]).max()))
        spread = float(np.abs(X.means).max()) + 12.0 * math.sqrt(float(np.linalg.eigvalsh(X.covs).max()))
        halfwidth = max(spread, 12.0 * sd)
        npts = self.grid_points if X.dim == 1 else min(self.grid_points, 513)
        return dens.discretize(X, halfwidth, npts | 1)

    def _combine(self, A: Density, m: int, B: Density, p: int) -> Density:
        theta = m / (m + p)
        if isinstance(A, GaussianMixture) and isinstance(B, GaussianMixture):
            try:
                return dens.convolve(A, B, theta, budget=self.budget)
            except BudgetExceeded:
                if A.dim > 2:
                    raise UnsupportedEstimator("component budget exceeded and d > 2: no grid fallback")
        return dens.convolve(self._grid(A), self._grid(B), theta, max_points=self.grid_points)

    def power_of_two(self, k: int) -> Density:
        n = 1 << k
        if n not in self._cache:
            half = self.power_of_two(k - 1)
            self._cache[n] = self._combine(half, n >> 1, half, n >> 1)
        return self._cache[n]

    def __getitem__(self, n: int) -> Density:
        if n < 1:
            raise ValueError("n must be >= 1")
        if n in self._cache:
            return self._cache[n]
        acc, m = None, 0
        for k in range(n.bit_length()):
            if n >> k & 1:
                P, p = self.power_of_two(k), 1 << k
                if acc is None:
                    acc, m = P, p
                else:
                    acc, m = self._combine(acc, m, P, p), m + p
                    self._cache.setdefault(m, acc)
        return self._cache.setdefault(n, acc)


def normalized_sum(Z: Density, n: int, budget: int = dens.DEFAULT_BUDGET, grid_points: int = GRID_POINTS) -> Density:
    """Law of n^{-1/2} (Z_1 + ... + Z_n) for iid copies of a centered Z."""
    return SumChain(Z, budget, grid_points)[n]


@dataclass(frozen=True)
class CltRow:
    n: int
    D: Estimate
    I: Estimate
    dLSI: Estimate
    method: str
    ent_clt: DeficitReport
    fi_clt: DeficitReport
    doubling: DeficitReport

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "D": self.D.value,
            "I": self.I.value,
            "dLSI": self.dLSI.value,
            "entCLT_deficit": self.ent_clt.deficit,
            "fiCLT_deficit": self.fi_clt.deficit,
            "doubling_deficit": self.doubling.deficit,
        }


@dataclass
class CltTrace:
    base: Density
    rows: list[CltRow] = field(default_factory=list)

    @property
    def reports(self) -> list[DeficitReport]:
        return [r for row in self.rows for r in (row.ent_clt, row.fi_clt, row.doubling)]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.reports)


def clt_trace(
    Z: Density,
    n_max: int,
    settings: EstimatorSettings | None = None,
    budget: int = dens.DEFAULT_BUDGET,
    grid_points: int = GRID_POINTS,
) -> CltTrace:
    """Rows n = 1..n_max with the entCLT, fiCLT and doubling reports."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    chain = SumChain(Z, budget, grid_points)
    cz = fn.catalog(Z, settings)
    dz = cz.lsi_deficit
    trace = CltTrace(Z)
    for n in range(1, n_max + 1):
        cu = fn.catalog(chain[n], settings)
        c2 = fn.catalog(chain[2 * n], settings)
        ent = report("entCLT", cz.rel_entropy - (n - 1) * dz, cu.rel_entropy, n=n)
        fi = report("fiCLT", 0.5 * cz.rel_fisher - n * dz + cu.lsi_deficit, 0.5 * cu.rel_fisher, n=n)
        dbl = report("doubling", c2.rel_entropy, cu.rel_entropy, n=n)
        trace.rows.append(
            CltRow(n, cu.rel_entropy, cu.rel_fisher, cu.lsi_deficit, cu.rel_entropy.method.value, ent, fi, dbl)
        )
    return trace


def subadditivity_check(
    Z: Density,
    pairs: Iterable[Sequence[int]],
    settings: EstimatorSettings | None = None,
    budget: int = dens.DEFAULT_BUDGET,
    grid_points: int = GRID_POINTS,
) -> list[DeficitReport]:
    """δ(U_{m+n}) <= δ(U_m) + δ(U_n) for each (m, n)."""
    chain = SumChain(Z, budget, grid_points)
    d = lambda k: fn.catalog(chain[k], settings).lsi_deficit  # noqa: E731
    out = []
    for m, n in pairs:
        out.append(report("subadditivity", d(m + n), d(m) + d(n), m=m, n=n))
    return out


def all_pairs(total: int) -> list[tuple[int, int]]:
    """(m, n) with 1 <= m <= n and m + n <= total."""
    return [(m, n) for n in range(1, total) for m in range(1, n + 1) if m + n <= total]
