import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from deficitlab import density as dens
from deficitlab import transport as tr
from deficitlab.transport import EntropicSettings, W2Method

from .conftest import gaussians, mixtures_1d

FAST_OT = EntropicSettings(n=256, reps=4, seed=3)


def quantile_oracle(X):
    """W2^2 to N(0,1) by scipy quadrature of (F^{-1}(u) - Phi^{-1}(u))^2 in u."""
    from scipy.optimize import brentq

    cdf = lambda x: sum(w * stats.norm.cdf(x, m[0], math.sqrt(c[0, 0])) for w, m, c in X.components)  # noqa: E731

    def q(u):
        return brentq(lambda x: cdf(x) - u, -40, 40, xtol=1e-13)

    f = lambda z: (q(stats.norm.cdf(z)) - z) ** 2 * stats.norm.pdf(z)  # noqa: E731
    return integrate.quad(f, -9, 9, limit=200, epsabs=1e-11)[0]


def test_standard_normal_distance_zero():
    w = tr.w2_to_gaussian(dens.standard_gaussian(3))
    assert w.value == 0.0 and w.method is W2Method.GAUSSIAN_CLOSED_FORM and w.stderr == 0.0


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=3))
def test_translate_distance_is_norm(mu):
    w = tr.w2_to_gaussian(dens.gaussian(mu, 1.0))
    assert w.value == pytest.approx(float(np.linalg.norm(mu)), abs=1e-12)


@given(gaussians())
def test_equality_for_unit_covariance_translates(X):
    Y = dens.gaussian(X.means[0], 1.0)
    assert abs(tr.talagrand_deficit(Y).deficit) < 1e-9
    assert abs(tr.hwi_deficit(Y).deficit) < 1e-9


def test_talagrand_variance_four():
    r = tr.talagrand_deficit(dens.gaussian([0.0], 4.0))
    assert r.deficit == pytest.approx(3 - math.log(4) - 1, abs=1e-12)


def test_w2_convolution_closed_form():
    r = tr.w2_convolution_deficit(dens.gaussian([0.0], 4.0), dens.standard_gaussian(1), 0.5)
    assert r.deficit == pytest.approx(0.5 - (math.sqrt(2.5) - 1) ** 2, abs=1e-12)
    r = tr.w2_convolution_deficit(dens.standard_gaussian(1), dens.standard_gaussian(1), 0.5)
    assert r.deficit == 0.0


@given(gaussians(centered=True))
def test_gaussian_inequalities_hold(X):
    assert tr.talagrand_deficit(X).deficit >= -1e-10
    assert tr.hwi_deficit(X).deficit >= -1e-10


def test_quantile_route_vs_scipy_oracle():
    X = dens.mixture([0.3, 0.7], [[-1.5], [0.8]], [0.4, 1.3])
    w = tr.w2_to_gaussian(X)
    assert w.method is W2Method.QUANTILE_1D
    assert w.value**2 == pytest.approx(quantile_oracle(X), abs=1e-8)


@given(mixtures_1d())
def test_mixture_suite_talagrand_hwi(X):
    for r in (tr.talagrand_deficit(X), tr.hwi_deficit(X)):
        assert r.deficit >= -3 * r.err


def test_entropic_matches_quantile_small():
    X = dens.mixture([0.5, 0.5], [[-1.0], [1.0]], [0.3, 0.3])
    q = tr.w2_to_gaussian(X)
    e = tr.w2_to_gaussian(X, FAST_OT, method="entropic_ot")
    assert e.method is W2Method.ENTROPIC_OT
    assert abs(q.value - e.value) <= 3 * math.hypot(q.stderr, e.stderr)


def test_entropic_is_deterministic():
    X = dens.mixture([0.5, 0.5], [[-1.0, 0.0], [1.0, 0.0]], [0.5, 0.5])
    a = tr.w2_to_gaussian(X, FAST_OT)
    b = tr.w2_to_gaussian(X, FAST_OT)
    assert a == b


def test_entropic_gaussian_2d_near_closed_form():
    X = dens.gaussian([0.0, 0.0], [[2.0, 0.3], [0.3, 0.6]])
    exact = tr.w2_to_gaussian(X).value
    e = tr.w2_to_gaussian(X, FAST_OT, method="entropic_ot")
    assert abs(e.value - exact) <= 3 * e.stderr


def test_sinkhorn_divergence_zero_on_identical_clouds():
    x = np.random.default_rng(0).normal(size=(200, 2))
    vals = tr.sinkhorn_divergences(x, x, [0.5, 0.1], tol=3e-4)
    # potentials converge to tol * median cost; the divergence inherits that accuracy
    med = float(np.median(np.sum((x[:, None] - x[None]) ** 2, axis=-1)))
    assert np.all(np.abs(vals) < 3e-4 * med)


def test_cloud_quantile_exact():
    S = dens.SampleCloud(np.array([[-1.0], [1.0]]))
    w = tr.w2_to_gaussian(S)
    assert w.method is W2Method.QUANTILE_1D and w.value > 0
