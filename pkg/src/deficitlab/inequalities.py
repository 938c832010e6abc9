"""Deficits of the entropy/Fisher convolution inequalities.

Each check returns a :class:`DeficitReport` oriented so that the predicted
sign of ``deficit = rhs - lhs`` is nonnegative. ``X`` and ``Y`` are always
treated as independent.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import density as dens
from . import functionals as fn
from . import transport
from .density import Density, GaussianMixture
from .errors import PreconditionViolated
from .functionals import Estimate, EstimatorSettings
from .reports import SIGMAS, DeficitReport, Verdict, classify, report

DEFAULT_THETA_GRID = tuple(round(0.1 * i, 10) for i in range(11)) + (0.5,)


def _require_centered(*xs: Density) -> None:
    for X in xs:
        if not dens.is_centered(X):
            raise PreconditionViolated("inequality requires centered random vectors")


def _cat(X, settings):
    return fn.catalog(X, settings)


# convolutions reused across inequalities on the same pair; keyed by identity
_CONV: "weakref.WeakKeyDictionary[object, weakref.WeakKeyDictionary]" = weakref.WeakKeyDictionary()


def _convolve(X: Density, Y: Density, theta: float) -> Density:
    per = _CONV.setdefault(X, weakref.WeakKeyDictionary()).setdefault(Y, {})
    key = float(theta)
    if key not in per:
        per[key] = dens.convolve(X, Y, key)
    return per[key]


def _add(X: Density, Y: Density) -> Density:
    per = _CONV.setdefault(X, weakref.WeakKeyDictionary()).setdefault(Y, {})
    if "sum" not in per:
        per["sum"] = dens.scale(_convolve(X, Y, 0.5), math.sqrt(2.0))
    return per["sum"]


def _heat(X: Density, t: float) -> Density:
    per = _CONV.setdefault(X, weakref.WeakKeyDictionary()).setdefault(X, {})
    key = ("heat", float(t))
    if key not in per:
        per[key] = dens.add_gaussian(X, key[1])
    return per[key]


def epi_deficit(X: Density, Y: Density, theta: float, settings: EstimatorSettings | None = None) -> DeficitReport:
    """theta D(X) + (1-theta) D(Y) >= D(sqrt(theta) X + sqrt(1-theta) Y)."""
    _require_centered(X, Y)
    Z = _convolve(X, Y, theta)
    lhs = _cat(Z, settings).rel_entropy
    rhs = theta * _cat(X, settings).rel_entropy + (1 - theta) * _cat(Y, settings).rel_entropy
    return report("epi", lhs, rhs, theta=theta)


def fii_deficit(X: Density, Y: Density, theta: float, settings=None) -> DeficitReport:
    """theta I(X) + (1-theta) I(Y) >= I(sqrt(theta) X + sqrt(1-theta) Y)."""
    _require_centered(X, Y)
    Z = _convolve(X, Y, theta)
    lhs = _cat(Z, settings).rel_fisher
    rhs = theta * _cat(X, settings).rel_fisher + (1 - theta) * _cat(Y, settings).rel_fisher
    return report("fii", lhs, rhs, theta=theta)


def interpolation_deficit(X: Density, Y: Density, theta: float, settings=None) -> DeficitReport:
    """D(X) + D(Y) <= (1-theta)/2 I(X) + theta/2 I(Y) + D(conv)."""
    _require_centered(X, Y)
    cx, cy = _cat(X, settings), _cat(Y, settings)
    lhs = cx.rel_entropy + cy.rel_entropy
    if not (cx.rel_fisher.finite and cy.rel_fisher.finite):
        return report("interpolation", lhs, Estimate.infinite(), theta=theta)
    cz = _cat(_convolve(X, Y, theta), settings)
    rhs = 0.5 * (1 - theta) * cx.rel_fisher + 0.5 * theta * cy.rel_fisher + cz.rel_entropy
    return report("interpolation", lhs, rhs, theta=theta)


def fii_form_deficit(X: Density, Y: Density, theta: float, settings=None) -> DeficitReport:
    """delta(conv) + theta/2 I(X) + (1-theta)/2 I(Y) <= delta(X) + delta(Y) + I(conv)/2.

    Algebraically the same inequality as :func:`interpolation_deficit`, but
    assembled from the LSI-deficit entries of the catalog.
    """
    _require_centered(X, Y)
    cx, cy = _cat(X, settings), _cat(Y, settings)
    if not (cx.rel_fisher.finite and cy.rel_fisher.finite):
        return report("fii_form", Estimate(0.0), Estimate.infinite(), theta=theta)
    cz = _cat(_convolve(X, Y, theta), settings)
    lhs = cz.lsi_deficit + 0.5 * theta * cx.rel_fisher + 0.5 * (1 - theta) * cy.rel_fisher
    rhs = cx.lsi_deficit + cy.lsi_deficit + 0.5 * cz.rel_fisher
    return report("fii_form", lhs, rhs, theta=theta)


def conv_lsi_deficit(X: Density, Y: Density, theta: float, settings=None) -> DeficitReport:
    """delta(sqrt(theta) X + sqrt(1-theta) Y) <= delta(X) + delta(Y); no centering needed."""
    cz = _cat(_convolve(X, Y, theta), settings)
    rhs = _cat(X, settings).lsi_deficit + _cat(Y, settings).lsi_deficit
    return report("conv_lsi", cz.lsi_deficit, rhs, theta=theta)


def _theta_form(cx, cy, cz, theta: float) -> Estimate:
    return (
        0.5 * theta * cx.rel_fisher
        + 0.5 * (1 - theta) * cy.rel_fisher
        - 0.5 * cz.rel_fisher
        + cz.lsi_deficit
    )


def sandwich_check(
    X: Density,
    Y: Density,
    settings=None,
    theta_grid: Sequence[float] | None = None,
) -> tuple[DeficitReport, DeficitReport]:
    """Factor-two sandwich L <= delta(X) + delta(Y) <= 2L at theta = 1/2.

    With ``theta_grid`` the lower bound uses the largest theta-form value on
    the grid instead of the theta = 1/2 value (the grid always includes 1/2).
    """
    _require_centered(X, Y)
    cx, cy = _cat(X, settings), _cat(Y, settings)
    mid = _cat(_convolve(X, Y, 0.5), settings)
    L = _theta_form(cx, cy, mid, 0.5)
    lower_L, lower_theta = L, 0.5
    for th in theta_grid or ():
        cand = _theta_form(cx, cy, _cat(_convolve(X, Y, th), settings), th)
        if cand.value > lower_L.value:
            lower_L, lower_theta = cand, th
    total = cx.lsi_deficit + cy.lsi_deficit
    return (
        report("sandwich_lower", lower_L, total, theta=lower_theta),
        report("sandwich_upper", total, 2 * L, theta=0.5),
    )


def reverse_epi_deficit(X: Density, Y: Density, settings=None) -> tuple[DeficitReport, DeficitReport]:
    """N(X+Y) <= (N(X)+N(Y))(lam p(X) + (1-lam) p(Y)), lam = N(Y)/(N(X)+N(Y)).

    Also returns the classical EPI deficit N(X+Y) - N(X) - N(Y).
    """
    cx, cy = _cat(X, settings), _cat(Y, settings)
    S = _cat(_add(X, Y), settings)
    nx, ny = cx.entropy_power, cy.entropy_power
    lam = ny.value / (nx.value + ny.value)
    # (nx + ny)(lam px + (1-lam) py) == ny px + nx py
    rhs = ny * cx.stam_defect + nx * cy.stam_defect
    return (
        report("reverse_epi", S.entropy_power, rhs, **{"lambda": lam}),
        report("classical_epi", nx + ny, S.entropy_power, **{"lambda": lam}),
    )


def reverse_fii_deficit(X: Density, Y: Density, settings=None) -> tuple[DeficitReport, DeficitReport]:
    """1/J(X+Y) <= (1/J(X) + 1/J(Y)) p(X) p(Y); also the classical FII deficit."""
    cx, cy = _cat(X, settings), _cat(Y, settings)
    if not (cx.fisher.finite and cy.fisher.finite):
        raise PreconditionViolated("reverse FII requires finite J(X), J(Y)")
    S = _cat(_add(X, Y), settings)
    inv_sum = cx.fisher.reciprocal() + cy.fisher.reciprocal()
    lhs = S.fisher.reciprocal()
    return (
        report("reverse_fii", lhs, inv_sum * cx.stam_defect * cy.stam_defect),
        report("classical_fii", inv_sum, lhs),
    )


def stam_submult_deficit(X: Density, Y: Density, settings=None) -> DeficitReport:
    """p(X+Y) <= p(X) p(Y)."""
    S = _cat(_add(X, Y), settings)
    return report("stam_submult", S.stam_defect, _cat(X, settings).stam_defect * _cat(Y, settings).stam_defect)


def three_epi_deficit(X: Density, Y: Density, t: float, settings=None) -> DeficitReport:
    """N(X+W) N(Y+W) >= N(X) N(Y) + N(X+Y+W) N(W) with W = sqrt(t) G."""
    if not t > 0:
        raise ValueError("t must be positive")
    N = lambda Z: _cat(Z, settings).entropy_power  # noqa: E731
    lhs = N(X) * N(Y) + t * N(_heat(_add(X, Y), t))
    rhs = N(_heat(X, t)) * N(_heat(Y, t))
    return report("three_epi", lhs, rhs, t=t)


def heat_slope(X: Density, h: float = 1e-3, settings=None) -> Estimate:
    """d/dt N(X + sqrt(t) G) at t = 0 by finite differences.

    Mixtures whose components all dominate h*I admit the two-sided quotient;
    otherwise a one-sided second-order stencil is used.
    """
    N = lambda t: _cat(_heat(X, t), settings).entropy_power  # noqa: E731
    two_sided = isinstance(X, GaussianMixture) and np.linalg.eigvalsh(X.covs).min() > 2 * h
    if two_sided:
        return (N(h) - N(-h)) / (2 * h)
    return (-3 * N(0.0) + 4 * N(h) - N(2 * h)) / (2 * h)


def concavity_check(
    X: Density,
    t_grid: Iterable[float],
    settings=None,
    h: float = 1e-3,
    slope_tol: float = 1e-3,
) -> list[DeficitReport]:
    """Tangent-line bound N(X + sqrt(t) G) <= N(X) + t p(X) along ``t_grid``.

    The final report compares the finite-difference heat slope at t = 0
    with p(X): lhs = |slope - p(X)|, rhs = ``slope_tol``.
    """
    cx = _cat(X, settings)
    out = []
    for t in t_grid:
        if not t > 0:
            raise ValueError("t must be positive")
        Nt = _cat(_heat(X, t), settings).entropy_power
        out.append(report("concavity", Nt, cx.entropy_power + t * cx.stam_defect, t=t))
    slope = heat_slope(X, h, settings)
    gap = slope - cx.stam_defect
    out.append(report("de_bruijn_slope", Estimate(abs(gap.value), gap.stderr, gap.method), Estimate(slope_tol), h=h))
    return out


# --------------------------------------------------------------------------
# stability under HWI jumps
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    """LSI deficit against the bound (eps/4) I(X) from the largest HWI jump."""

    eps_entropy: float
    eps_wasserstein: float
    eps_fisher: float
    eps: float
    lsi_deficit: Estimate
    rel_fisher: Estimate
    bound: float
    deficit: float
    err: float
    verdict: Verdict
    vacuous: bool = False

    @property
    def ok(self) -> bool:
        return self.verdict is not Verdict.VIOLATED

    def to_record(self) -> dict:
        return {
            "name": "hwi_jump",
            "eps_entropy": self.eps_entropy,
            "eps_wasserstein": self.eps_wasserstein,
            "eps_fisher": self.eps_fisher,
            "eps": self.eps,
            "lsi_deficit": self.lsi_deficit.value,
            "bound": self.bound,
            "deficit": self.deficit,
            "err": self.err,
            "verdict": self.verdict.value,
        }


def _ratio(a: Estimate, b: Estimate) -> tuple[float, float]:
    """a/b with first-order error; b must be positive."""
    r = a.value / b.value
    return r, math.hypot(a.stderr, r * b.stderr) / b.value


def hwi_jump_check(
    X: Density,
    settings=None,
    entropic: transport.EntropicSettings = transport.DEFAULT_ENTROPIC,
    zero_tol: float = 1e-12,
) -> StabilityReport:
    """Largest admissible jump parameter among the D, W2 and I conditions."""
    _require_centered(X)
    cx = _cat(X, settings)
    D, I, delta = cx.rel_entropy, cx.rel_fisher, cx.lsi_deficit
    if D.value <= zero_tol or I.value <= zero_tol:
        return StabilityReport(0.0, 0.0, 0.0, 0.0, delta, I, 0.0, delta.value, 0.0, Verdict.HOLDS, True)
    Xh = _convolve(X, X, 0.5)
    ch = _cat(Xh, settings)
    r_d, se_d = _ratio(ch.rel_entropy, D)
    r_i, se_i = _ratio(ch.rel_fisher, I)
    W = transport.w2_to_gaussian(X, entropic).as_estimate()
    Wh = transport.w2_to_gaussian(Xh, entropic).as_estimate()
    if W.value > 0:
        r_w, se_rw = _ratio(Wh, W)
    else:
        r_w, se_rw = 1.0, 0.0
    candidates = [
        (min(max(1 - r_d, 0.0), 1.0), se_d),
        (min(max(1 - r_w, 0.0), 1.0) ** 2, 2 * abs(1 - r_w) * se_rw),
        (min(max(1 - r_i, 0.0), 1.0), se_i),
    ]
    eps, se_eps = max(candidates, key=lambda c: c[0])
    bound = 0.25 * eps * I.value
    deficit = delta.value - bound
    err = math.sqrt(delta.stderr**2 + (0.25 * I.value * se_eps) ** 2 + (0.25 * eps * I.stderr) ** 2)
    err += 64 * 2.2e-16 * max(1.0, abs(delta.value), bound)
    return StabilityReport(
        candidates[0][0], candidates[1][0], candidates[2][0], eps,
        delta, I, bound, deficit, err, classify(deficit, err, SIGMAS),
    )


# --------------------------------------------------------------------------
# dispatch by name
# --------------------------------------------------------------------------

THETA_FAMILY = {
    "epi": epi_deficit,
    "fii": fii_deficit,
    "interpolation": interpolation_deficit,
    "fii_form": fii_form_deficit,
    "conv_lsi": conv_lsi_deficit,
}
NAMES = tuple(THETA_FAMILY) + (
    "sandwich",
    "reverse_epi",
    "reverse_fii",
    "stam_submult",
    "three_epi",
    "concavity",
)
DEFAULT_T_GRID = (0.1, 1.0, 10.0)


def evaluate(
    name: str,
    X: Density,
    Y: Density,
    theta_grid: Sequence[float] = DEFAULT_THETA_GRID,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    settings=None,
) -> list[DeficitReport]:
    """All reports of one named inequality for the pair (X, Y).

    θ-dependent inequalities produce one report per distinct θ; ``three_epi``
    and ``concavity`` one per t (concavity uses X only).
    """
    thetas = sorted(set(float(t) for t in theta_grid))
    if name in THETA_FAMILY:
        return [THETA_FAMILY[name](X, Y, th, settings) for th in thetas]
    if name == "sandwich":
        return list(sandwich_check(X, Y, settings, theta_grid=thetas))
    if name == "reverse_epi":
        return list(reverse_epi_deficit(X, Y, settings))
    if name == "reverse_fii":
        return list(reverse_fii_deficit(X, Y, settings))
    if name == "stam_submult":
        return [stam_submult_deficit(X, Y, settings)]
    if name == "three_epi":
        return [three_epi_deficit(X, Y, t, settings) for t in t_grid]
    if name == "concavity":
        return concavity_check(X, t_grid, settings)
    raise KeyError(f"unknown inequality {name!r}; choose from {NAMES}")
