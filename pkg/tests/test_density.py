import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats
from scipy.integrate import trapezoid

from deficitlab import density as dens
from deficitlab import functionals as fn
from deficitlab.errors import (
    BudgetExceeded,
    InsufficientCoverage,
    InvalidDensity,
    InvalidDimension,
    InvalidPair,
    InvalidScale,
)

from .conftest import gaussians, mixtures_1d


def l1_on_grid(G, pdf):
    x = G.axes()[0]
    return float(trapezoid(np.abs(G.values - pdf(x)), x))


# --------------------------------------------------------------------------
# construction and validation
# --------------------------------------------------------------------------


@pytest.mark.parametrize("d", [1, 2, 3])
def test_standard_gaussian(d):
    G = dens.standard_gaussian(d)
    assert G.n_components == 1 and G.weights[0] == 1.0
    mean, cov = dens.moments(G)
    np.testing.assert_array_equal(mean, np.zeros(d))
    np.testing.assert_array_equal(cov, np.eye(d))


@pytest.mark.parametrize("d", [0, -1, 1.5])
def test_standard_gaussian_rejects_bad_dim(d):
    with pytest.raises(InvalidDimension):
        dens.standard_gaussian(d)


def test_mixture_validation():
    with pytest.raises(InvalidDensity):
        dens.GaussianMixture(np.array([0.5, 0.6]), np.zeros((2, 1)), np.ones((2, 1, 1)))
    with pytest.raises(InvalidDensity):
        dens.GaussianMixture(np.array([1.0, 0.0]), np.zeros((2, 1)), np.ones((2, 1, 1)))
    with pytest.raises(InvalidDensity):
        dens.gaussian([0.0, 0.0], [[1.0, 0.5], [0.4, 1.0]])
    with pytest.raises(InvalidDensity):
        dens.gaussian([0.0, 0.0], [[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(InvalidDensity):
        dens.gaussian([0.0], [1e-14])


def test_grid_validation():
    x = np.linspace(-10, 10, 201)
    v = stats.norm.pdf(x)
    with pytest.raises(InvalidDensity):
        dens.GridDensity([-10.0], [0.1], 2 * v)
    with pytest.raises(InvalidDensity):
        dens.GridDensity([-10.0], [-0.1], v)
    with pytest.raises(InvalidDimension):
        dens.GridDensity(np.zeros(3), np.ones(3), np.ones((3, 3, 3)))
    G = dens.GridDensity.normalized([-10.0], [0.1], 2 * v)
    assert abs(G.mass() - 1) < 1e-12 and G.renorm_error == pytest.approx(1.0, rel=1e-6)


def test_cloud_validation():
    with pytest.raises(InvalidDensity):
        dens.SampleCloud(np.zeros((1, 2)))
    with pytest.raises(InvalidDensity):
        dens.SampleCloud(np.array([[0.0], [np.inf]]))


def test_pdf_matches_scipy():
    X = dens.mixture([0.3, 0.7], [[-1.0, 0.5], [2.0, 0.0]], [0.5, 2.0])
    x = np.random.default_rng(0).normal(size=(50, 2)) * 2
    ref = 0.3 * stats.multivariate_normal([-1.0, 0.5], 0.5 * np.eye(2)).pdf(x) + 0.7 * stats.multivariate_normal(
        [2.0, 0.0], 2.0 * np.eye(2)
    ).pdf(x)
    np.testing.assert_allclose(X.pdf(x), ref, rtol=1e-12)


def test_score_matches_finite_difference():
    X = dens.mixture([0.4, 0.6], [[-1.0], [1.5]], [0.3, 1.2])
    x = np.linspace(-3, 3, 13)[:, None]
    _, score = X.logpdf_and_score(x)
    h = 1e-6
    fd = (X.logpdf(x + h) - X.logpdf(x - h)) / (2 * h)
    np.testing.assert_allclose(score[:, 0], fd, atol=1e-7)


# --------------------------------------------------------------------------
# moments
# --------------------------------------------------------------------------


def test_moments_symmetric_bimodal():
    X = dens.mixture([0.5, 0.5], [[-1.0], [1.0]], [1.0, 1.0])
    mean, cov = dens.moments(X)
    assert mean[0] == pytest.approx(0.0, abs=1e-15)
    assert cov[0, 0] == pytest.approx(2.0, rel=1e-14)
    # independent oracle: 10^6 draws; Var of the sample variance is (m4 - s^4)/n with m4 = 10
    pts = dens.sample(X, 10**6, 11).points[:, 0]
    assert abs(pts.var() - 2.0) < 4 * math.sqrt(6.0 / pts.size)


def test_cloud_mean_stderr():
    S = dens.sample(dens.standard_gaussian(1), 10**5, 3)
    mean, _ = dens.moments(S)
    assert abs(mean[0]) < 3 / math.sqrt(10**5)


def test_grid_moments_match_mixture():
    X = dens.mixture([0.5, 0.5], [[-1.0], [2.0]], [1.0, 0.5])
    G = dens.discretize(X, 14.0, 2049)
    m1, c1 = dens.moments(X)
    m2, c2 = dens.moments(G)
    np.testing.assert_allclose(m2, m1, atol=1e-9)
    np.testing.assert_allclose(c2, c1, atol=1e-8)


# --------------------------------------------------------------------------
# scaling, translation, centering
# --------------------------------------------------------------------------


def test_scale_gaussian():
    Y = dens.scale(dens.standard_gaussian(1), 2.0)
    assert Y.covs[0, 0, 0] == 4.0


@pytest.mark.parametrize("s", [0.0, -1.0, math.inf, math.nan])
def test_scale_rejects(s):
    with pytest.raises(InvalidScale):
        dens.scale(dens.standard_gaussian(1), s)


@given(mixtures_1d(), st.floats(0.3, 3.0))
def test_scaling_laws(X, t):
    cx, cs = fn.catalog(X), fn.catalog(dens.scale(X, t))
    assert cs.entropy_power.value == pytest.approx(t * t * cx.entropy_power.value, rel=1e-7)
    assert cs.fisher.value * t * t == pytest.approx(cx.fisher.value, rel=1e-7)


def test_scale_grid_and_cloud():
    G = dens.discretize(dens.standard_gaussian(1), 10.0, 1025)
    Gs = dens.scale(G, 3.0)
    assert abs(Gs.mass() - 1.0) < 1e-12
    assert dens.moments(Gs)[1][0, 0] == pytest.approx(9.0, rel=1e-8)
    S = dens.sample(dens.standard_gaussian(2), 100, 1)
    np.testing.assert_array_equal(dens.scale(S, 2.0).points, 2.0 * S.points)


def test_center():
    X = dens.center(dens.gaussian([5.0], 1.0))
    assert X.means[0, 0] == 0.0
    S = dens.center(dens.sample(dens.gaussian([5.0, -1.0], 1.0), 1000, 2))
    assert np.all(S.points.mean(axis=0) == pytest.approx(0.0, abs=1e-14))


# --------------------------------------------------------------------------
# convolution
# --------------------------------------------------------------------------


def test_convolve_gaussian_stability():
    Z = dens.convolve(dens.standard_gaussian(1), dens.standard_gaussian(1), 0.5)
    assert Z.n_components == 1
    np.testing.assert_allclose(Z.covs[0], [[1.0]], atol=1e-15)


def test_convolve_rho_pair_gives_standard():
    rho = 0.5
    X = dens.gaussian([0, 0], [[1, rho], [rho, 1]])
    Y = dens.gaussian([0, 0], [[1, -rho], [-rho, 1]])
    Z = dens.convolve(X, Y, 0.5)
    np.testing.assert_allclose(Z.covs[0], np.eye(2), atol=1e-15)


def test_convolve_components_and_grid_cross_check():
    X = dens.mixture([0.5, 0.5], [[-1.0], [1.0]], [0.5, 1.0])
    Y = dens.mixture([0.3, 0.7], [[-2.0], [0.5]], [1.0, 0.3])
    Z = dens.convolve(X, Y, 0.4)
    assert Z.n_components == 4 and Z.weights.sum() == pytest.approx(1.0, abs=1e-15)
    Gz = dens.convolve(dens.discretize(X, 12.0, 2049), dens.discretize(Y, 12.0, 2049), 0.4)
    assert abs(Gz.mass() - 1.0) < 1e-9
    assert l1_on_grid(Gz, lambda x: Z.pdf(x[:, None])) < 1e-4


@given(gaussians(dims=(1, 2)), gaussians(dims=(1, 2)), st.floats(0.0, 1.0))
def test_convolve_moments_exact(X, Y, theta):
    if X.dim != Y.dim:
        return
    Z = dens.convolve(X, Y, theta)
    mx, cx = dens.moments(X)
    my, cy = dens.moments(Y)
    mz, cz = dens.moments(Z)
    np.testing.assert_allclose(mz, math.sqrt(theta) * mx + math.sqrt(1 - theta) * my, atol=1e-12)
    np.testing.assert_allclose(cz, theta * cx + (1 - theta) * cy, atol=1e-12)


@given(mixtures_1d(centered=False), mixtures_1d(centered=False), st.floats(0.05, 0.95))
def test_convolve_symmetry(X, Y, theta):
    a, b = dens.convolve(X, Y, theta), dens.convolve(Y, X, 1 - theta)
    x = np.linspace(-6, 6, 41)[:, None]
    np.testing.assert_allclose(a.pdf(x), b.pdf(x), rtol=1e-10, atol=1e-14)


def test_convolve_errors():
    with pytest.raises(InvalidPair):
        dens.convolve(dens.standard_gaussian(1), dens.standard_gaussian(2), 0.5)
    X = dens.mixture(np.ones(10) / 10, np.arange(10.0)[:, None], np.ones(10))
    Y = dens.mixture(np.ones(10) / 10, np.arange(10.0)[:, None] * math.pi, np.ones(10))
    with pytest.raises(BudgetExceeded):
        dens.convolve(X, Y, 0.3, budget=50)


def test_discretize_then_convolve_commutes():
    X = dens.mixture([0.6, 0.4], [[-1.0], [1.5]], [0.4, 0.8])
    Y = dens.mixture([0.5, 0.5], [[-0.5], [0.5]], [1.0, 0.2])
    a = dens.discretize(dens.convolve(X, Y, 0.5), 12.0, 1025)
    b = dens.convolve(dens.discretize(X, 12.0, 1025), dens.discretize(Y, 12.0, 1025), 0.5)
    x = a.axes()[0]
    bv = np.interp(x, b.axes()[0], b.values, left=0.0, right=0.0)
    assert float(trapezoid(np.abs(a.values - bv), x)) < 1e-3


def test_cloud_convolution_deterministic():
    S = dens.sample(dens.standard_gaussian(1), 5000, 1)
    T = dens.sample(dens.standard_gaussian(1), 5000, 2)
    a, b = dens.convolve(S, T, 0.5), dens.convolve(S, T, 0.5)
    np.testing.assert_array_equal(a.points, b.points)
    assert abs(a.points.var() - 1.0) < 0.1


def test_add_gaussian_negative_time_for_mixture():
    X = dens.gaussian([0.0], 1.0)
    assert dens.add_gaussian(X, -0.5).covs[0, 0, 0] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        dens.add_gaussian(dens.discretize(X, 10, 257), -0.1)


# --------------------------------------------------------------------------
# discretization and sampling
# --------------------------------------------------------------------------


def test_discretize_entropy_of_standard_normal():
    G = dens.discretize(dens.standard_gaussian(1), 10.0, 2048)
    assert abs(fn.entropy(G).value - 0.5 * math.log(2 * math.pi * math.e)) < 1e-6


def test_discretize_bimodal_mass():
    G = dens.discretize(dens.mixture([0.5, 0.5], [[-3.0], [3.0]], [1.0, 1.0]), 12.0, 2049)
    assert abs(G.mass() - 1.0) < 1e-10


def test_discretize_insufficient_coverage():
    with pytest.raises(InsufficientCoverage):
        dens.discretize(dens.standard_gaussian(1), 2.0, 513)


def test_sample_determinism():
    a = dens.sample(dens.standard_gaussian(1), 10**4, 7)
    b = dens.sample(dens.standard_gaussian(1), 10**4, 7)
    np.testing.assert_array_equal(a.points, b.points)


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------


def test_json_round_trip_all_kinds():
    X = dens.mixture([0.25, 0.75], [[0.1, -0.3], [1 / 3, 2.0]], [0.7, 1.3])
    G = dens.discretize(dens.standard_gaussian(1), 9.0, 101)
    S = dens.sample(X, 20, 5)
    for D in (X, G, S):
        back = dens.loads(dens.dumps(D))
        assert type(back) is type(D)
        assert dens.dumps(back) == dens.dumps(D)
    doc = json.loads(dens.dumps(X))
    assert doc["kind"] == "mixture" and set(doc["components"][0]) == {"weight", "mean", "cov"}
    with pytest.raises(InvalidDensity):
        dens.from_dict({"kind": "spline", "dim": 1})
