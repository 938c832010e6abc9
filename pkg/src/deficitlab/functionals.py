"""Entropy, Fisher information and their Gaussian-relative versions.

Every functional returns an :class:`Estimate` carrying a value, an error
figure and the method that produced it. Single Gaussians use closed forms;
mixtures use adaptive quadrature (d = 1), a tensor trapezoid rule (d = 2) or
Monte Carlo (d >= 3, or on request); grids use trapezoid sums with central
difference scores.
"""

from __future__ import annotations

import enum
import math
import weakref
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np
from scipy import ndimage

from . import density as dens
from .density import DENSITY_FLOOR, Density, GaussianMixture, GridDensity, SampleCloud
from .errors import EstimatorFailed, InvalidDensity, UnsupportedEstimator
from .quadrature import gauss_kronrod, trapezoid_2d

LOG_2PI = math.log(2 * math.pi)
TWO_PI_E = 2 * math.pi * math.e
FISHER_FLOOR = 1e-10


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


_RANK = {Method.CLOSED_FORM: 0, Method.QUADRATURE: 1, Method.MONTE_CARLO: 2}


def _worst(a: Method, b: Method) -> Method:
    return a if _RANK[a] >= _RANK[b] else b


@dataclass(frozen=True)
class Estimate:
    """A scalar functional value with its error figure.

    ``stderr`` is a standard error for Monte Carlo, an absolute error
    estimate for quadrature, and exactly zero for closed forms.
    """

    value: float
    stderr: float = 0.0
    method: Method = Method.CLOSED_FORM

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "method", Method(self.method))
        se = float(self.stderr)
        if not se >= 0:
            se = math.inf
        if self.method is Method.CLOSED_FORM:
            se = 0.0
        elif se == 0.0:
            se = 1e-300
        object.__setattr__(self, "stderr", se)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    @classmethod
    def infinite(cls) -> "Estimate":
        return cls(math.inf, 0.0, Method.CLOSED_FORM)

    def __add__(self, other):
        if isinstance(other, Estimate):
            return Estimate(
                self.value + other.value,
                math.hypot(self.stderr, other.stderr),
                _worst(self.method, other.method),
            )
        return Estimate(self.value + float(other), self.stderr, self.method)

    __radd__ = __add__

    def __neg__(self):
        return Estimate(-self.value, self.stderr, self.method)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        if isinstance(c, Estimate):
            # first-order propagation, independent errors
            return Estimate(
                self.value * c.value,
                math.hypot(c.value * self.stderr, self.value * c.stderr),
                _worst(self.method, c.method),
            )
        c = float(c)
        if c == 0.0:
            return Estimate(0.0)
        return Estimate(c * self.value, abs(c) * self.stderr, self.method)

    __rmul__ = __mul__

    def reciprocal(self) -> "Estimate":
        if self.value == 0:
            return Estimate.infinite()
        if not self.finite:
            return Estimate(0.0)
        return Estimate(1.0 / self.value, self.stderr / self.value**2, self.method)

    def __truediv__(self, c):
        if isinstance(c, Estimate):
            return self * c.reciprocal()
        return self * (1.0 / float(c))

    def to_record(self, prefix: str) -> dict:
        return {
            prefix: self.value,
            f"{prefix}_err": self.stderr,
            f"{prefix}_method": self.method.value,
        }


@dataclass(frozen=True)
class EstimatorSettings:
    """Knobs shared by the numerical estimators.

    ``method`` forces ``"quadrature"`` or ``"monte_carlo"`` on mixtures; the
    default picks closed forms for single Gaussians, quadrature for d <= 2
    and Monte Carlo otherwise.
    """

    method: Optional[str] = None
    quad_tol: float = 1e-8
    mc_samples: int = 1_000_000
    seed: int = 0


DEFAULT_SETTINGS = EstimatorSettings()


@dataclass(frozen=True)
class FunctionalCatalog:
    entropy: Estimate
    entropy_power: Estimate
    fisher: Estimate
    rel_entropy: Estimate
    rel_fisher: Estimate
    lsi_deficit: Estimate
    stam_defect: Estimate
    second_moment: Estimate

    def to_record(self) -> dict:
        rec = {}
        for f in fields(self):
            rec.update(getattr(self, f.name).to_record(f.name))
        return rec


# --------------------------------------------------------------------------
# closed forms
# --------------------------------------------------------------------------


def gaussian_closed_form(mean: np.ndarray, cov: np.ndarray) -> FunctionalCatalog:
    d = mean.shape[0]
    evals = np.linalg.eigvalsh(cov)
    logdet = float(np.sum(np.log(evals)))
    tr = float(np.sum(evals))
    tr_inv = float(np.sum(1.0 / evals))
    m2 = float(mean @ mean)
    h = 0.5 * (d * math.log(TWO_PI_E) + logdet)
    N = math.exp(logdet / d)
    J = tr_inv
    D = 0.5 * (tr + m2 - d - logdet)
    I = tr + tr_inv - 2 * d + m2
    return FunctionalCatalog(
        entropy=Estimate(h),
        entropy_power=Estimate(N),
        fisher=Estimate(J),
        rel_entropy=Estimate(D),
        rel_fisher=Estimate(I),
        lsi_deficit=Estimate(0.5 * I - D),
        stam_defect=Estimate(N * J / d),
        second_moment=Estimate(tr + m2),
    )


def _assemble(d, h, J, D, I, m2, delta=None, method=Method.QUADRATURE, cov_hJ=0.0):
    """Derive N, p, delta from (h, J, D, I) value/error pairs."""
    (hv, he), (Jv, Je), (Dv, De), (Iv, Ie) = h, J, D, I
    N = math.exp(2.0 * hv / d) / TWO_PI_E
    Ne = N * (2.0 / d) * he
    p = N * Jv / d
    rel = (2.0 / d * he) ** 2 + (Je / Jv) ** 2 + 2 * (2.0 / d) * cov_hJ / Jv if Jv > 0 else math.inf
    pe = abs(p) * math.sqrt(max(rel, 0.0))
    if delta is None:
        delta = (0.5 * Iv - Dv, math.hypot(0.5 * Ie, De))
    if not math.isfinite(Iv):
        dl = Estimate.infinite()
    else:
        dl = Estimate(delta[0], delta[1], method)
    return FunctionalCatalog(
        entropy=Estimate(hv, he, method),
        entropy_power=Estimate(N, Ne, method),
        fisher=Estimate(Jv, Je, method) if math.isfinite(Jv) else Estimate.infinite(),
        rel_entropy=Estimate(Dv, De, method),
        rel_fisher=Estimate(Iv, Ie, method) if math.isfinite(Iv) else Estimate.infinite(),
        lsi_deficit=dl,
        stam_defect=Estimate(p, pe, method) if math.isfinite(p) else Estimate.infinite(),
        second_moment=Estimate(m2, 0.0, Method.CLOSED_FORM),
    )


# --------------------------------------------------------------------------
# mixtures: quadrature
# --------------------------------------------------------------------------


def _mixture_integrand(X: GaussianMixture, s: float = 1.0):
    """Integrands of h, J, D(.||G_s), I(.||G_s) at points of shape (..., d)."""
    d = X.dim
    log_norm_s = 0.5 * d * (LOG_2PI + math.log(s))

    def fn(pts):
        shape = pts.shape[:-1]
        flat = pts.reshape(-1, d)
        logf, score = X.logpdf_and_score(flat)
        f = np.exp(logf)
        logg = -0.5 * np.sum(flat * flat, axis=1) / s - log_norm_s
        rel = score + flat / s
        out = np.stack([
            -f * logf,
            f * np.sum(score * score, axis=1),
            f * (logf - logg),
            f * np.sum(rel * rel, axis=1),
        ])
        return out.reshape((4,) + shape)

    return fn


def _mixture_box(X: GaussianMixture, nsd: float):
    sd = np.sqrt(np.diagonal(X.covs, axis1=1, axis2=2))
    lo = (X.means - nsd * sd).min(axis=0)
    hi = (X.means + nsd * sd).max(axis=0)
    return lo, hi


def mixture_integrals(X: GaussianMixture, s: float = 1.0, tol: float = 1e-8):
    """Quadrature values/errors of (h, J, D(.||G_s), I(.||G_s)) for d <= 2."""
    fn = _mixture_integrand(X, s)
    if X.dim == 1:
        lo, hi = _mixture_box(X, 40.0)
        sd = np.sqrt(X.covs[:, 0, 0])
        bps = np.concatenate([[lo[0], hi[0]], X.means[:, 0], X.means[:, 0] - 4 * sd, X.means[:, 0] + 4 * sd])
        bps = bps[(bps >= lo[0]) & (bps <= hi[0])]
        val, err = gauss_kronrod(lambda x: fn(x[..., None]), bps, tol=tol)
    elif X.dim == 2:
        lo, hi = _mixture_box(X, 12.0)
        sd_min = float(np.sqrt(np.linalg.eigvalsh(X.covs).min()))
        val, err = trapezoid_2d(
            lambda a, b: fn(np.stack([a, b], axis=-1)), lo, hi, sd_min / 4.0
        )
    else:
        raise UnsupportedEstimator("quadrature path supports d <= 2")
    floor = 1e-15 * (1.0 + np.abs(val))
    return val, np.maximum(err, floor)


def _mixture_quadrature(X: GaussianMixture, tol: float) -> FunctionalCatalog:
    val, err = mixture_integrals(X, 1.0, tol)
    m2 = dens.second_moment(X)
    return _assemble(
        X.dim,
        (val[0], err[0]),
        (val[1], err[1]),
        (val[2], err[2]),
        (val[3], err[3]),
        m2,
        method=Method.QUADRATURE,
    )


# --------------------------------------------------------------------------
# mixtures: Monte Carlo
# --------------------------------------------------------------------------


def mixture_mc_samples(X: GaussianMixture, n: int, seed: int, s: float = 1.0, chunk: int = 100_000):
    """Per-sample contributions (-log f, |score|^2, log f/g_s, |score + x/s|^2)."""
    pts = dens.sample(X, n, seed).points
    d = X.dim
    out = np.empty((4, n))
    log_norm_s = 0.5 * d * (LOG_2PI + math.log(s))
    for i in range(0, n, chunk):
        x = pts[i : i + chunk]
        logf, score = X.logpdf_and_score(x)
        logg = -0.5 * np.sum(x * x, axis=1) / s - log_norm_s
        rel = score + x / s
        out[0, i : i + chunk] = -logf
        out[1, i : i + chunk] = np.sum(score * score, axis=1)
        out[2, i : i + chunk] = logf - logg
        out[3, i : i + chunk] = np.sum(rel * rel, axis=1)
    return out


def _mixture_monte_carlo(X: GaussianMixture, n: int, seed: int) -> FunctionalCatalog:
    terms = mixture_mc_samples(X, n, seed)
    mean = terms.mean(axis=1)
    cov = np.cov(terms) / n
    se = np.sqrt(np.diag(cov))
    delta_terms = 0.5 * terms[3] - terms[2]
    delta = (float(delta_terms.mean()), float(delta_terms.std(ddof=1) / math.sqrt(n)))
    return _assemble(
        X.dim,
        (mean[0], se[0]),
        (mean[1], se[1]),
        (mean[2], se[2]),
        (mean[3], se[3]),
        dens.second_moment(X),
        delta=delta,
        method=Method.MONTE_CARLO,
        cov_hJ=float(cov[0, 1]),
    )


# --------------------------------------------------------------------------
# grids
# --------------------------------------------------------------------------


def _fisher_mask(v: np.ndarray) -> np.ndarray:
    """Nodes whose whole difference stencil lies above the relative floor."""
    above = v > FISHER_FLOOR * v.max()
    return ndimage.binary_erosion(above, iterations=2, border_value=1)


def _grid_h_J(G: GridDensity) -> tuple[float, float, float]:
    """Trapezoid entropy and Fisher information of a grid density.

    The Fisher integrand uses only nodes above ``FISHER_FLOOR * max``; the
    third value bounds the contribution of the excluded nodes.
    """
    v = G.values
    w = G.quad_weights()
    logv = np.log(np.maximum(v, DENSITY_FLOOR))
    h = -float(np.sum(w * v * logv))
    grads = np.gradient(v, *G.spacing, edge_order=2)
    if G.dim == 1:
        grads = [grads]
    g2 = sum(g * g for g in grads)
    keep = _fisher_mask(v)
    q = np.where(keep, g2 / np.where(keep, v, 1.0), 0.0)
    J = float(np.sum(w * q))
    excluded = float(np.sum(w * np.where(keep, 0.0, v)))
    # excluded mass times the largest squared score seen on kept nodes
    score2 = float((q[keep] / v[keep]).max())
    return h, J, excluded * score2


def _grid_catalog(G: GridDensity) -> FunctionalCatalog:
    d = G.dim
    h, J, tailJ = _grid_h_J(G)
    sub = G.values[(slice(None, None, 2),) * d]
    try:
        coarse = GridDensity.normalized(G.origin, 2 * G.spacing, sub)
        hc, Jc, _ = _grid_h_J(coarse)
        he, Je = abs(h - hc), abs(J - Jc)
    except InvalidDensity:
        he = Je = math.inf
    slack = G.renorm_error + G.tail_mass
    he += slack * (1.0 + abs(h))
    Je += slack * (1.0 + abs(J)) + tailJ
    m2 = dens.second_moment(G)
    D = -h + 0.5 * d * LOG_2PI + 0.5 * m2
    I = J - 2 * d + m2
    return _assemble(d, (h, he), (J, Je), (D, he), (I, Je), m2, method=Method.QUADRATURE)


# --------------------------------------------------------------------------
# dispatch + cache
# --------------------------------------------------------------------------

_CACHE: "weakref.WeakKeyDictionary[object, dict]" = weakref.WeakKeyDictionary()


def catalog(X: Density, settings: EstimatorSettings | None = None) -> FunctionalCatalog:
    """All functionals of ``X`` at once (memoized per density object)."""
    settings = settings or DEFAULT_SETTINGS
    per = _CACHE.setdefault(X, {})
    if settings in per:
        return per[settings]
    result = _compute_catalog(X, settings)
    per[settings] = result
    return result


def _compute_catalog(X: Density, settings: EstimatorSettings) -> FunctionalCatalog:
    if isinstance(X, SampleCloud):
        raise UnsupportedEstimator(
            "entropy and Fisher information are not estimated from raw samples"
        )
    if isinstance(X, GridDensity):
        return _grid_catalog(X)
    if not isinstance(X, GaussianMixture):
        raise TypeError(f"not a density: {type(X).__name__}")
    method = settings.method
    if method is None:
        if X.is_gaussian:
            return gaussian_closed_form(X.means[0], X.covs[0])
        method = "quadrature" if X.dim <= 2 else "monte_carlo"
    if method == "closed_form":
        if not X.is_gaussian:
            raise UnsupportedEstimator("closed forms exist only for single Gaussians")
        return gaussian_closed_form(X.means[0], X.covs[0])
    if method == "quadrature":
        try:
            return _mixture_quadrature(X, settings.quad_tol)
        except EstimatorFailed:
            method = "monte_carlo"
    if method == "monte_carlo":
        return _mixture_monte_carlo(X, settings.mc_samples, settings.seed)
    raise ValueError(f"unknown estimator method {method!r}")


def entropy(X: Density, settings=None) -> Estimate:
    """Differential entropy h(X) = -int f log f."""
    return catalog(X, settings).entropy


def entropy_power(X: Density, settings=None) -> Estimate:
    """N(X) = exp(2 h / d) / (2 pi e)."""
    return catalog(X, settings).entropy_power


def fisher(X: Density, settings=None) -> Estimate:
    """Fisher information J(X) = int f |grad log f|^2."""
    return catalog(X, settings).fisher


def rel_entropy(X: Density, settings=None) -> Estimate:
    """Relative entropy of X with respect to N(0, I)."""
    return catalog(X, settings).rel_entropy


def rel_fisher(X: Density, settings=None) -> Estimate:
    """Relative Fisher information of X with respect to N(0, I)."""
    return catalog(X, settings).rel_fisher


def lsi_deficit(X: Density, settings=None) -> Estimate:
    """I(X)/2 - D(X); +inf when I(X) is infinite."""
    return catalog(X, settings).lsi_deficit


def stam_defect(X: Density, settings=None) -> Estimate:
    """N(X) J(X) / d."""
    return catalog(X, settings).stam_defect


# --------------------------------------------------------------------------
# identities relative to G_s = N(0, s I)
# --------------------------------------------------------------------------


def relative_to_scaled_gaussian(X: Density, s: float, settings=None) -> tuple[Estimate, Estimate]:
    """Direct D(X || G_s) and I(X || G_s), not routed through h and J."""
    settings = settings or DEFAULT_SETTINGS
    if not s > 0:
        raise ValueError("s must be positive")
    d = X.dim
    if isinstance(X, GaussianMixture) and X.is_gaussian and settings.method is None:
        mu, cov = X.means[0], X.covs[0]
        evals = np.linalg.eigvalsh(cov)
        m2 = float(mu @ mu)
        D = 0.5 * (evals.sum() / s + m2 / s - d + d * math.log(s) - np.log(evals).sum())
        I = float(np.sum((1.0 / s - 1.0 / evals) ** 2 * evals)) + m2 / s**2
        return Estimate(D), Estimate(I)
    if isinstance(X, GaussianMixture):
        if settings.method == "monte_carlo" or X.dim > 2:
            t = mixture_mc_samples(X, settings.mc_samples, settings.seed, s=s)
            n = t.shape[1]
            se = t.std(axis=1, ddof=1) / math.sqrt(n)
            m = t.mean(axis=1)
            return Estimate(m[2], se[2], Method.MONTE_CARLO), Estimate(m[3], se[3], Method.MONTE_CARLO)
        val, err = mixture_integrals(X, s, settings.quad_tol)
        return Estimate(val[2], err[2], Method.QUADRATURE), Estimate(val[3], err[3], Method.QUADRATURE)
    if isinstance(X, GridDensity):
        v, w = X.values, X.quad_weights()
        pts = X.mesh()
        r2 = sum(p * p for p in pts)
        logg = -0.5 * r2 / s - 0.5 * d * (LOG_2PI + math.log(s))
        logv = np.log(np.maximum(v, DENSITY_FLOOR))
        D = float(np.sum(w * v * (logv - logg)))
        grads = np.gradient(logv, *X.spacing, edge_order=2)
        if d == 1:
            grads = [grads]
        rel2 = sum((g + p / s) ** 2 for g, p in zip(grads, pts))
        I = float(np.sum(w * np.where(_fisher_mask(v), v * rel2, 0.0)))
        cat = catalog(X, settings)
        return (
            Estimate(D, cat.entropy.stderr, Method.QUADRATURE),
            Estimate(I, cat.fisher.stderr, Method.QUADRATURE),
        )
    raise UnsupportedEstimator("relative functionals need a density")


def gaussian_identities(Z: Density, s: float = 1.0, settings=None):
    """Residual checks of the identities relating (h, J) to (D, I) against N(0, sI).

    ``h(Z) - (d/2) log(2 pi e s) = -D(Z||G_s) + E|Z|^2/(2s) - d/2`` and
    ``J(Z) = I(Z||G_s) + 2d/s - E|Z|^2/s^2``. The relative terms come from
    :func:`relative_to_scaled_gaussian`, not from the catalog, so each
    report's deficit is a genuine residual that should vanish within ``err``.
    """
    from .reports import report

    d = Z.dim
    cat = catalog(Z, settings)
    D_s, I_s = relative_to_scaled_gaussian(Z, s, settings)
    m2 = dens.second_moment(Z)
    lhs_h = cat.entropy - 0.5 * d * math.log(TWO_PI_E * s)
    rhs_h = -D_s + (m2 / (2 * s) - 0.5 * d)
    rhs_J = I_s + (2 * d / s - m2 / s**2)
    return (
        report("gaussian_identity_entropy", lhs_h, rhs_h, s=s),
        report("gaussian_identity_fisher", cat.fisher, rhs_J, s=s),
    )
