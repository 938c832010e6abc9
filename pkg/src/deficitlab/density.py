"""Probability laws on R^d and the law-level operations the checks consume.

Three carriers are supported:

* :class:`GaussianMixture` -- exact path, any dimension.
* :class:`GridDensity` -- density values on a regular grid, d in {1, 2}.
* :class:`SampleCloud` -- i.i.d. draws, Monte Carlo path.

All objects are immutable after construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import ndimage, signal, special

from .errors import (
    BudgetExceeded,
    InsufficientCoverage,
    InvalidDensity,
    InvalidDimension,
    InvalidPair,
    InvalidScale,
)

DEFAULT_BUDGET = 4096
PIVOT_TOL = 1e-12
DENSITY_FLOOR = 1e-300
GRID_MASS_TOL = 1e-6
FFT_NOISE = 1e-13


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# --------------------------------------------------------------------------
# Gaussian mixtures
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Finite mixture of nondegenerate Gaussians.

    Parameters
    ----------
    weights : (k,) array
        Strictly positive, summing to one within 1e-12.
    means : (k, d) array
    covs : (k, d, d) array
        Symmetric positive definite.
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)
    logdet: np.ndarray = field(init=False, repr=False)
    prec: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        mu = np.asarray(self.means, dtype=float)
        if mu.ndim == 1:
            mu = mu[:, None]
        k, d = mu.shape
        if d < 1:
            raise InvalidDimension("dimension must be >= 1")
        cov = np.asarray(self.covs, dtype=float)
        if cov.ndim == 1:
            cov = cov[:, None, None]
        if w.shape != (k,) or cov.shape != (k, d, d):
            raise InvalidDensity(
                f"component shapes disagree: weights {w.shape}, means {mu.shape}, covs {cov.shape}"
            )
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InvalidDensity("mixture weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidDensity(f"mixture weights sum to {w.sum()!r}, not 1")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(cov))):
            raise InvalidDensity("nonfinite mean or covariance")
        asym = np.abs(cov - np.swapaxes(cov, 1, 2)).max()
        if asym > 1e-12 * max(1.0, np.abs(cov).max()):
            raise InvalidDensity("covariance matrices must be symmetric")
        cov = 0.5 * (cov + np.swapaxes(cov, 1, 2))
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise InvalidDensity("covariance not positive definite") from exc
        pivots = np.diagonal(chol, axis1=1, axis2=2) ** 2
        if np.any(pivots <= PIVOT_TOL):
            raise InvalidDensity("near-singular covariance component")
        eye = np.broadcast_to(np.eye(d), cov.shape)
        linv = np.linalg.solve(chol, eye)
        prec = np.swapaxes(linv, 1, 2) @ linv
        object.__setattr__(self, "weights", _freeze(w / w.sum()))
        object.__setattr__(self, "means", _freeze(mu))
        object.__setattr__(self, "covs", _freeze(cov))
        object.__setattr__(self, "chol", _freeze(chol))
        object.__setattr__(self, "logdet", _freeze(2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)))
        object.__setattr__(self, "prec", _freeze(0.5 * (prec + np.swapaxes(prec, 1, 2))))

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def components(self) -> list[tuple[float, np.ndarray, np.ndarray]]:
        return [(float(w), m, c) for w, m, c in zip(self.weights, self.means, self.covs)]

    @property
    def is_gaussian(self) -> bool:
        return self.n_components == 1

    def component_logpdf(self, x: np.ndarray) -> np.ndarray:
        """log(w_i phi_i(x)) for points x of shape (n, d); returns (n, k)."""
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        diff = x[:, None, :] - self.means[None, :, :]
        # solve L z = diff per component
        z = np.einsum("kij,nkj->nki", np.linalg.inv(self.chol), diff)
        maha = np.einsum("nki,nki->nk", z, z)
        return (
            np.log(self.weights)[None, :]
            - 0.5 * maha
            - 0.5 * self.logdet[None, :]
            - 0.5 * self.dim * math.log(2 * math.pi)
        )

    def logpdf_and_score(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return log f(x) and grad log f(x) at points x of shape (n, d)."""
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        lc = self.component_logpdf(x)
        logf = special.logsumexp(lc, axis=1)
        resp = np.exp(lc - logf[:, None])
        diff = self.means[None, :, :] - x[:, None, :]
        comp_score = np.einsum("kij,nkj->nki", self.prec, diff)
        score = np.einsum("nk,nki->ni", resp, comp_score)
        return logf, score

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        return special.logsumexp(self.component_logpdf(x), axis=1)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.logpdf(x))


# --------------------------------------------------------------------------
# Grids
# --------------------------------------------------------------------------


def _trap_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Density values on a regular grid in one or two dimensions.

    ``values`` has shape ``counts``; node ``i`` on axis ``a`` sits at
    ``origin[a] + i * spacing[a]``. ``renorm_error`` and ``tail_mass`` record
    how much mass was moved by renormalization and lost to truncation.
    """

    origin: np.ndarray
    spacing: np.ndarray
    values: np.ndarray
    renorm_error: float = 0.0
    tail_mass: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        d = v.ndim
        if d not in (1, 2):
            raise InvalidDimension("grid densities support d = 1 or 2")
        o = np.atleast_1d(np.asarray(self.origin, dtype=float))
        h = np.atleast_1d(np.asarray(self.spacing, dtype=float))
        if o.shape != (d,) or h.shape != (d,):
            raise InvalidDensity("origin/spacing must have one entry per axis")
        if np.any(h <= 0) or not np.all(np.isfinite(h)):
            raise InvalidDensity("grid spacing must be positive")
        if min(v.shape) < 3:
            raise InvalidDensity("grid needs at least 3 nodes per axis")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidDensity("grid values must be finite and nonnegative")
        object.__setattr__(self, "origin", _freeze(o))
        object.__setattr__(self, "spacing", _freeze(h))
        object.__setattr__(self, "values", _freeze(v))
        mass = self.mass()
        if abs(mass - 1.0) > GRID_MASS_TOL:
            raise InvalidDensity(f"grid mass {mass!r} not within {GRID_MASS_TOL} of 1")

    @classmethod
    def normalized(cls, origin, spacing, values, tail_mass: float = 0.0) -> "GridDensity":
        """Build a grid density, rescaling ``values`` to unit trapezoidal mass."""
        v = np.clip(np.asarray(values, dtype=float), 0.0, None)
        h = np.atleast_1d(np.asarray(spacing, dtype=float))
        mass = _grid_integral(v, h)
        if not mass > 0:
            raise InvalidDensity("grid has zero mass")
        return cls(origin, h, v / mass, renorm_error=abs(mass - 1.0), tail_mass=tail_mass)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def counts(self) -> tuple[int, ...]:
        return self.values.shape

    def axes(self) -> list[np.ndarray]:
        return [o + h * np.arange(n) for o, h, n in zip(self.origin, self.spacing, self.counts)]

    def quad_weights(self) -> np.ndarray:
        ws = [_trap_weights(n, h) for n, h in zip(self.counts, self.spacing)]
        return ws[0] if self.dim == 1 else np.outer(ws[0], ws[1])

    def integrate(self, f_values: np.ndarray) -> float:
        return float(np.sum(self.quad_weights() * f_values))

    def mass(self) -> float:
        return _grid_integral(self.values, self.spacing)

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")


def _grid_integral(v: np.ndarray, h: np.ndarray) -> float:
    ws = [_trap_weights(n, hh) for n, hh in zip(v.shape, h)]
    if v.ndim == 1:
        return float(ws[0] @ v)
    return float(ws[0] @ v @ ws[1])


# --------------------------------------------------------------------------
# Samples
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampleCloud:
    points: np.ndarray
    seed: int = 0

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2 or p.shape[0] < 2:
            raise InvalidDensity("sample cloud needs at least 2 points")
        if not np.all(np.isfinite(p)):
            raise InvalidDensity("sample points must be finite")
        object.__setattr__(self, "points", _freeze(p))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n(self) -> int:
        return self.points.shape[0]


Density = Union[GaussianMixture, GridDensity, SampleCloud]


# --------------------------------------------------------------------------
# constructors
# --------------------------------------------------------------------------


def gaussian(mean, cov) -> GaussianMixture:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 0 or cov.size == 1:
        cov = float(cov.reshape(())) * np.eye(mean.shape[0])
    return GaussianMixture(np.ones(1), mean[None, :], cov[None, :, :])


def mixture(weights, means, covs) -> GaussianMixture:
    """Convenience constructor; scalar covariances are broadcast to c*I."""
    means = np.asarray(means, dtype=float)
    if means.ndim == 1:
        means = means[:, None]
    k, d = means.shape
    covs = np.asarray(covs, dtype=float)
    if covs.ndim == 1 and d > 1:
        covs = covs[:, None, None] * np.eye(d)[None]
    elif covs.ndim == 1:
        covs = covs[:, None, None]
    w = np.asarray(weights, dtype=float)
    return GaussianMixture(w / w.sum(), means, covs)


def standard_gaussian(d: int) -> GaussianMixture:
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise InvalidDimension(f"dimension must be a positive integer, got {d!r}")
    return gaussian(np.zeros(d), np.eye(d))


# --------------------------------------------------------------------------
# moments
# --------------------------------------------------------------------------


def moments(X: Density) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance matrix of ``X``."""
    if isinstance(X, GaussianMixture):
        w = X.weights
        mean = w @ X.means
        second = np.einsum("k,kij->ij", w, X.covs + np.einsum("ki,kj->kij", X.means, X.means))
        cov = second - np.outer(mean, mean)
        return mean, 0.5 * (cov + cov.T)
    if isinstance(X, GridDensity):
        mass = X.mass()
        if not mass > 0:
            raise InvalidDensity("degenerate grid (zero mass)")
        grids = X.mesh()
        mean = np.array([X.integrate(X.values * g) for g in grids]) / mass
        d = X.dim
        cov = np.empty((d, d))
        for i in range(d):
            for j in range(i, d):
                cov[i, j] = cov[j, i] = (
                    X.integrate(X.values * (grids[i] - mean[i]) * (grids[j] - mean[j])) / mass
                )
        return mean, cov
    if isinstance(X, SampleCloud):
        mean = X.points.mean(axis=0)
        c = X.points - mean
        return mean, (c.T @ c) / X.n
    raise TypeError(f"not a density: {type(X).__name__}")


def second_moment(X: Density) -> float:
    """E|X|^2."""
    mean, cov = moments(X)
    return float(np.trace(cov) + mean @ mean)


# --------------------------------------------------------------------------
# scaling, translation, centering
# --------------------------------------------------------------------------


def scale(X: Density, s: float) -> Density:
    """Law of s*X for s > 0."""
    if not (s > 0 and math.isfinite(s)):
        raise InvalidScale(f"scale must be positive and finite, got {s!r}")
    if isinstance(X, GaussianMixture):
        return GaussianMixture(X.weights, s * X.means, s * s * X.covs)
    if isinstance(X, GridDensity):
        return GridDensity(
            s * X.origin,
            s * X.spacing,
            X.values / s**X.dim,
            renorm_error=X.renorm_error,
            tail_mass=X.tail_mass,
        )
    if isinstance(X, SampleCloud):
        return SampleCloud(s * X.points, X.seed)
    raise TypeError(f"not a density: {type(X).__name__}")


def translate(X: Density, c) -> Density:
    """Law of X + c."""
    c = np.broadcast_to(np.asarray(c, dtype=float), (X.dim,))
    if isinstance(X, GaussianMixture):
        return GaussianMixture(X.weights, X.means + c, X.covs)
    if isinstance(X, GridDensity):
        return GridDensity(X.origin + c, X.spacing, X.values, X.renorm_error, X.tail_mass)
    if isinstance(X, SampleCloud):
        return SampleCloud(X.points + c, X.seed)
    raise TypeError(f"not a density: {type(X).__name__}")


def center(X: Density) -> Density:
    """Subtract the exact (mixture, grid) or empirical (cloud) mean."""
    if isinstance(X, SampleCloud):
        return SampleCloud(X.points - X.points.mean(axis=0), X.seed)
    mean, _ = moments(X)
    return translate(X, -mean)


def is_centered(X: Density, tol: float = 1e-9) -> bool:
    mean, cov = moments(X)
    return float(np.linalg.norm(mean)) <= tol * max(1.0, math.sqrt(np.trace(cov)))


# --------------------------------------------------------------------------
# convolution
# --------------------------------------------------------------------------


def merge_components(weights, means, covs, decimals: int = 11):
    """Sum the weights of components whose (mean, cov) agree to ``decimals``."""
    k, d = means.shape
    keys = np.round(np.concatenate([means, covs.reshape(k, d * d)], axis=1), decimals)
    keys = keys + 0.0  # folds -0.0 into 0.0
    uniq, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    if uniq.shape[0] == k:
        return weights, means, covs
    inverse = inverse.reshape(-1)
    w = np.bincount(inverse, weights=weights)
    return w, means[first], covs[first]


def _mixture_convolve(X: GaussianMixture, Y: GaussianMixture, a: float, b: float, budget: int, a2=None, b2=None):
    """Law of a*X + b*Y for independent mixtures, merged.

    ``a2`` and ``b2`` default to a*a and b*b; passing theta and 1 - theta
    keeps iid self-convolutions of a Gaussian exactly fixed.
    """
    a2 = a * a if a2 is None else a2
    b2 = b * b if b2 is None else b2
    w = np.outer(X.weights, Y.weights).ravel()
    mu = (a * X.means[:, None, :] + b * Y.means[None, :, :]).reshape(-1, X.dim)
    cov = (a2 * X.covs[:, None] + b2 * Y.covs[None, :]).reshape(-1, X.dim, X.dim)
    w, mu, cov = merge_components(w, mu, cov)
    if w.shape[0] > budget:
        raise BudgetExceeded(
            f"convolution needs {w.shape[0]} components, budget is {budget}; discretize first"
        )
    return GaussianMixture(w / w.sum(), mu, cov)


def convolve(
    X: Density,
    Y: Density,
    theta: float,
    *,
    budget: int = DEFAULT_BUDGET,
    max_points: int | None = None,
) -> Density:
    """Law of sqrt(theta) X + sqrt(1 - theta) Y for independent X, Y.

    Mixtures convolve exactly (components with identical parameters are
    merged). Grids use zero-padded FFT convolution of the rescaled grids.
    Clouds add independently shuffled samples. Mixed pairs are promoted to
    the less exact carrier.
    """
    if X.dim != Y.dim:
        raise InvalidPair(f"dimension mismatch: {X.dim} vs {Y.dim}")
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta!r}")
    a, b = math.sqrt(theta), math.sqrt(1.0 - theta)
    if isinstance(X, SampleCloud) or isinstance(Y, SampleCloud):
        return _cloud_convolve(X, Y, a, b)
    if theta == 1.0:
        return X
    if theta == 0.0:
        return Y
    if isinstance(X, GaussianMixture) and isinstance(Y, GaussianMixture):
        return _mixture_convolve(X, Y, a, b, budget, theta, 1.0 - theta)
    gx = X if isinstance(X, GridDensity) else _discretize_like(X, Y)
    gy = Y if isinstance(Y, GridDensity) else _discretize_like(Y, X)
    return _grid_convolve(scale(gx, a), scale(gy, b), max_points=max_points)


def add(X: Density, Y: Density, **kw) -> Density:
    """Law of the unscaled sum X + Y."""
    return scale(convolve(X, Y, 0.5, **kw), math.sqrt(2.0))


def add_gaussian(X: Density, t: float) -> Density:
    """Law of X + sqrt(t) G with G standard normal.

    For mixtures ``t`` may be negative as long as every component covariance
    stays positive definite (used for two-sided difference quotients).
    """
    if t == 0:
        return X
    if isinstance(X, GaussianMixture):
        return GaussianMixture(X.weights, X.means, X.covs + t * np.eye(X.dim)[None])
    if t < 0:
        raise ValueError("negative heat time only defined for mixtures")
    g = gaussian(np.zeros(X.dim), t * np.eye(X.dim))
    if isinstance(X, SampleCloud):
        return add(X, g)
    return _grid_convolve(X, _discretize_like(g, X), max_points=None)


def _cloud_convolve(X: Density, Y: Density, a: float, b: float) -> SampleCloud:
    seed_x = X.seed if isinstance(X, SampleCloud) else 0
    seed_y = Y.seed if isinstance(Y, SampleCloud) else 0
    n = min(d.n for d in (X, Y) if isinstance(d, SampleCloud))
    rng = np.random.default_rng([seed_x & (2**63 - 1), seed_y & (2**63 - 1), 0xC0C0])
    if not isinstance(X, SampleCloud):
        X = sample(X, n, int(rng.integers(2**63)))
    if not isinstance(Y, SampleCloud):
        Y = sample(Y, n, int(rng.integers(2**63)))
    px = rng.permutation(X.n)[:n]
    py = rng.permutation(Y.n)[:n]
    return SampleCloud(a * X.points[px] + b * Y.points[py], int(rng.integers(2**63)))


def _resample(G: GridDensity, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cubic-spline resample of ``G`` onto spacing ``h`` anchored at its origin."""
    ext = G.spacing * (np.array(G.counts) - 1)
    n_new = np.floor(ext / h + 1e-9).astype(int) + 1
    if np.all(np.abs(h - G.spacing) <= 1e-14 * G.spacing):
        return G.origin, G.values
    coords = np.meshgrid(*[np.arange(n) * hh / hg for n, hh, hg in zip(n_new, h, G.spacing)], indexing="ij")
    vals = ndimage.map_coordinates(G.values, coords, order=3, mode="constant", cval=0.0)
    return G.origin, np.clip(vals, 0.0, None)


def _trim(values: np.ndarray, origin: np.ndarray, h: np.ndarray, rel: float = 1e-30):
    """Drop edge slabs whose values are all below rel * max."""
    thresh = rel * values.max()
    origin = origin.copy()
    sl = []
    for ax in range(values.ndim):
        other = tuple(i for i in range(values.ndim) if i != ax)
        prof = values.max(axis=other) if other else values
        idx = np.nonzero(prof > thresh)[0]
        lo, hi = max(idx[0] - 2, 0), min(idx[-1] + 3, values.shape[ax])
        origin[ax] += lo * h[ax]
        sl.append(slice(lo, hi))
    return values[tuple(sl)], origin


def _grid_convolve(X: GridDensity, Y: GridDensity, max_points: int | None) -> GridDensity:
    h = np.minimum(X.spacing, Y.spacing)
    ox, vx = _resample(X, h)
    oy, vy = _resample(Y, h)
    vals = signal.fftconvolve(vx, vy, mode="full") * float(np.prod(h))
    # values below the FFT round-off level carry no information
    vals[vals < FFT_NOISE * vals.max()] = 0.0
    vals, origin = _trim(vals, ox + oy, h)
    if max_points is not None and max(vals.shape) > max_points:
        g = GridDensity.normalized(origin, h, vals)
        ext = h * (np.array(vals.shape) - 1)
        new_h = ext / (max_points - 1)
        origin, vals = _resample(g, np.maximum(new_h, h))
        h = np.maximum(new_h, h)
    prior = X.renorm_error + Y.renorm_error
    out = GridDensity.normalized(origin, h, vals, tail_mass=X.tail_mass + Y.tail_mass)
    return GridDensity(out.origin, out.spacing, out.values, out.renorm_error + prior, out.tail_mass)


# --------------------------------------------------------------------------
# discretization
# --------------------------------------------------------------------------


def discretize(X: GaussianMixture, halfwidth: float, points_per_axis: int, center_at=None) -> GridDensity:
    """Sample a mixture on a square grid centered at its mean.

    Raises :class:`InsufficientCoverage` when the (union-bounded) mass
    outside the box exceeds 1e-8.
    """
    if not isinstance(X, GaussianMixture):
        raise TypeError("discretize expects a GaussianMixture")
    if X.dim > 2:
        raise InvalidDimension("grid densities support d = 1 or 2")
    if not halfwidth > 0 or points_per_axis < 3:
        raise ValueError("halfwidth must be positive and points_per_axis >= 3")
    c = moments(X)[0] if center_at is None else np.broadcast_to(np.asarray(center_at, float), (X.dim,))
    lo, hi = c - halfwidth, c + halfwidth
    sd = np.sqrt(np.diagonal(X.covs, axis1=1, axis2=2))
    tail = 0.0
    for ax in range(X.dim):
        z_lo = (lo[ax] - X.means[:, ax]) / sd[:, ax]
        z_hi = (hi[ax] - X.means[:, ax]) / sd[:, ax]
        tail += float(X.weights @ (special.ndtr(z_lo) + special.ndtr(-z_hi)))
    if tail > 1e-8:
        raise InsufficientCoverage(f"grid truncates mass {tail:.3g} > 1e-8")
    h = np.full(X.dim, 2.0 * halfwidth / (points_per_axis - 1))
    axes = [lo[a] + h[a] * np.arange(points_per_axis) for a in range(X.dim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, X.dim)
    vals = X.pdf(pts).reshape((points_per_axis,) * X.dim)
    return GridDensity.normalized(lo, h, vals, tail_mass=tail)


def _discretize_like(X: Density, ref: Density) -> GridDensity:
    """Discretize a mixture at a resolution compatible with ``ref``."""
    if isinstance(X, GridDensity):
        return X
    if not isinstance(X, GaussianMixture):
        raise TypeError("cannot discretize this density")
    mean, _ = moments(X)
    sd_max = float(np.sqrt(np.linalg.eigvalsh(X.covs).max()))
    spread = float(np.abs(X.means - mean).max())
    halfwidth = spread + 12.0 * sd_max
    sd_min = float(np.sqrt(np.linalg.eigvalsh(X.covs).min()))
    h = sd_min / 16.0
    if isinstance(ref, GridDensity):
        h = min(h, float(ref.spacing.min()))
    n = int(min(max(2 * math.ceil(halfwidth / h) + 1, 257), 2**15 if X.dim == 1 else 1025))
    return discretize(X, halfwidth, n)


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------


def sample(X: Density, n: int, seed: int) -> SampleCloud:
    """Draw ``n`` points deterministically from ``seed``."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(int(seed))
    if isinstance(X, GaussianMixture):
        comp = rng.choice(X.n_components, size=n, p=X.weights)
        z = rng.standard_normal((n, X.dim))
        pts = X.means[comp] + np.einsum("nij,nj->ni", X.chol[comp], z)
    elif isinstance(X, GridDensity):
        w = (X.quad_weights() * X.values).ravel()
        idx = rng.choice(w.size, size=n, p=w / w.sum())
        nodes = np.stack(np.unravel_index(idx, X.counts), axis=-1).astype(float)
        jitter = rng.uniform(-0.5, 0.5, size=(n, X.dim))
        pts = X.origin + (nodes + jitter) * X.spacing
    elif isinstance(X, SampleCloud):
        pts = X.points[rng.integers(0, X.n, size=n)]
    else:
        raise TypeError(f"not a density: {type(X).__name__}")
    return SampleCloud(pts, int(seed))


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------


def to_dict(X: Density) -> dict:
    if isinstance(X, GaussianMixture):
        return {
            "kind": "mixture",
            "dim": X.dim,
            "components": [
                {"weight": float(w), "mean": m.tolist(), "cov": c.tolist()}
                for w, m, c in X.components
            ],
        }
    if isinstance(X, GridDensity):
        return {
            "kind": "grid",
            "dim": X.dim,
            "origin": X.origin.tolist(),
            "spacing": X.spacing.tolist(),
            "counts": list(X.counts),
            "values": X.values.ravel().tolist(),
        }
    if isinstance(X, SampleCloud):
        return {"kind": "samples", "dim": X.dim, "points": X.points.tolist(), "seed": X.seed}
    raise TypeError(f"not a density: {type(X).__name__}")


def from_dict(doc: dict) -> Density:
    kind = doc.get("kind")
    dim = int(doc["dim"])
    if kind == "mixture":
        comps = doc["components"]
        return GaussianMixture(
            np.array([c["weight"] for c in comps]),
            np.array([c["mean"] for c in comps], dtype=float).reshape(len(comps), dim),
            np.array([c["cov"] for c in comps], dtype=float).reshape(len(comps), dim, dim),
        )
    if kind == "grid":
        counts = tuple(int(c) for c in doc["counts"])
        if len(counts) != dim:
            raise InvalidDensity("counts must have one entry per axis")
        vals = np.asarray(doc["values"], dtype=float).reshape(counts)
        return GridDensity(doc["origin"], doc["spacing"], vals)
    if kind == "samples":
        pts = np.asarray(doc["points"], dtype=float).reshape(-1, dim)
        return SampleCloud(pts, int(doc.get("seed", 0)))
    raise InvalidDensity(f"unknown density kind {kind!r}")


def dumps(X: Density) -> str:
    return json.dumps(to_dict(X))


def loads(s: str) -> Density:
    return from_dict(json.loads(s))
