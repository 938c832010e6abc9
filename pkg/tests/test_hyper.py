import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from deficitlab import generators as gen
from deficitlab import hyper
from deficitlab.errors import InvalidConfig, InvalidFunction, InvalidTime
from deficitlab.hyper import GridFn, HyperParams, LogLinear


def quad_norm(f, q):
    """||f||_{L^q(γ)} on R by scipy quadrature."""
    val = integrate.quad(lambda x: f(np.array(x)) ** q * stats.norm.pdf(x), -40, 40, limit=400, epsabs=0, epsrel=1e-12)[0]
    return val ** (1 / q)


def quad_mehler(f, t, x):
    """P_t f(x) = E f(e^{-t} x + sqrt(1 - e^{-2t}) Y) by scipy quadrature."""
    e, s = math.exp(-t), math.sqrt(-math.expm1(-2 * t))
    return integrate.quad(lambda y: f(np.array(e * x + s * y)) * stats.norm.pdf(y), -30, 30, limit=200, epsrel=1e-12)[0]


BUMP = gen.load_function("bump:0.5,2,0.8")
SINEXP = gen.load_function("sinexp:1.3")


# --------------------------------------------------------------------------
# parameters and test functions
# --------------------------------------------------------------------------


def test_params_validation():
    with pytest.raises(InvalidConfig):
        HyperParams(1.0)
    with pytest.raises(InvalidTime):
        HyperParams(2.0, -0.1)
    with pytest.raises(InvalidConfig):
        HyperParams(2.0, 0.0, 1.5)
    hp = HyperParams(3.0, 0.5)
    assert hp.q == pytest.approx(1 + 2 * math.e) and hp.p_conj == pytest.approx(1.5)


def test_function_validation():
    with pytest.raises(InvalidFunction):
        LogLinear([1.0], scale=0.0)
    with pytest.raises(InvalidFunction):
        GridFn(0.0, 0.1, np.array([1.0, 0.0, 1.0, 1.0]))
    with pytest.raises(InvalidFunction):
        GridFn(0.0, 0.1, np.ones(3))
    with pytest.raises(KeyError):
        gen.load_function("cubic:1")


def test_gridfn_interpolates_and_extends_linearly_in_log():
    f = GridFn.from_function(lambda x: np.exp(0.3 * x), lo=-2, hi=2, h=0.05)
    x = np.array([-3.0, -1.234, 0.0, 1.9, 3.5])
    assert np.allclose(f.log(x), 0.3 * x, atol=1e-10)
    assert np.allclose(f.dlog(x), 0.3, atol=1e-8)


# --------------------------------------------------------------------------
# semigroup and norms against quadrature oracles
# --------------------------------------------------------------------------


@given(st.floats(-2, 2), st.floats(1.0, 6.0))
def test_loglinear_norm_vs_quad(a, q):
    f = LogLinear([a], scale=1.7)
    assert hyper.lq_gamma_norm(f, q).value == pytest.approx(quad_norm(f, q), rel=1e-9)


@pytest.mark.parametrize("f", [BUMP, SINEXP], ids=["bump", "sinexp"])
@pytest.mark.parametrize("q", [1.5, 2.0, 4.0])
def test_gridfn_norm_vs_quad(f, q):
    assert hyper.lq_gamma_norm(f, q).value == pytest.approx(quad_norm(f, q), rel=1e-9)


@given(st.floats(-2, 2), st.floats(0.01, 3.0), st.floats(-3, 3))
def test_loglinear_semigroup_vs_mehler(a, t, x):
    f = LogLinear([a])
    assert float(hyper.ou_apply(f, t)(np.array(x))) == pytest.approx(quad_mehler(f, t, x), rel=1e-9)


@pytest.mark.parametrize("t", [0.05, 0.5, 2.0])
def test_gridfn_semigroup_vs_mehler(t):
    g = hyper.ou_apply(BUMP, t)
    for x in (-2.0, 0.0, 0.7, 3.0):
        assert float(g(np.array(x))) == pytest.approx(quad_mehler(BUMP, t, x), rel=1e-8)


def test_semigroup_property():
    a = hyper.ou_apply(hyper.ou_apply(BUMP, 0.3), 0.4)
    b = hyper.ou_apply(BUMP, 0.7)
    x = np.linspace(-4, 4, 17)
    assert np.allclose(a(x), b(x), rtol=1e-7)
    with pytest.raises(InvalidTime):
        hyper.ou_apply(BUMP, -1.0)


# --------------------------------------------------------------------------
# Nelson and the derivative at t = 0
# --------------------------------------------------------------------------


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=3), st.floats(1.1, 6.0), st.floats(0.0, 3.0))
def test_loglinear_nelson_is_equality(a, p, t):
    r = hyper.nelson_check(LogLinear(a), p, t)
    assert abs(r.deficit) <= 1e-10 * max(1.0, r.rhs.value)


@pytest.mark.parametrize("f", [BUMP, SINEXP], ids=["bump", "sinexp"])
@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_nelson_holds_with_slack(f, p):
    for t in (0.1, 1.0):
        r = hyper.nelson_check(f, p, t)
        assert r.ok and r.deficit > 0


def test_loglinear_tilted_law_is_gaussian_and_slope_vanishes():
    f = LogLinear([0.7, -0.2])
    assert abs(hyper.tilted_lsi_deficit(f, 3.0).value) < 1e-12
    assert abs(hyper.log_norm_slope(f, 3.0).value) < 1e-7


def bump_tilted_deficit_oracle(p, c=0.5, h=2.0, w=0.8):
    """δ_LSI of the law ∝ f^p γ for the bump, by scipy quadrature of the analytic log f and (log f)'."""
    g = lambda x: h * np.exp(-0.5 * ((x - c) / w) ** 2)  # noqa: E731
    logf = lambda x: math.log1p(g(x))  # noqa: E731
    dlogf = lambda x: -g(x) * (x - c) / w**2 / (1 + g(x))  # noqa: E731
    quad = lambda fn: integrate.quad(fn, -40, 40, points=[c], limit=400, epsabs=1e-14, epsrel=1e-13)[0]  # noqa: E731
    Z = quad(lambda x: math.exp(p * logf(x)) * stats.norm.pdf(x))
    rho = lambda x: math.exp(p * logf(x)) * stats.norm.pdf(x) / Z  # noqa: E731
    D = quad(lambda x: rho(x) * p * logf(x)) - math.log(Z)
    I = quad(lambda x: rho(x) * (p * dlogf(x)) ** 2)
    return 0.5 * I - D


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_tilted_deficit_vs_quad_oracle(p):
    direct = hyper.tilted_lsi_deficit(BUMP, p).value
    assert direct == pytest.approx(bump_tilted_deficit_oracle(p), abs=1e-7)
    assert direct > 0


@pytest.mark.parametrize("f", [BUMP, SINEXP], ids=["bump", "sinexp"])
@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_gross_derivative_matches_finite_difference(f, p):
    r = hyper.gross_derivative_check(f, p)
    assert r.ok, r
    assert r.params["deriv_rhs"] < 0
    assert abs(r.params["deriv_lhs"] - r.params["deriv_rhs"]) < 1e-4


def test_entropy_production_zero_for_same_loglinear():
    f = LogLinear([1.0])
    assert abs(hyper.entropy_production(f, f, 2.0, 0.5).value) < 1e-12


def test_improved_nelson_derivative_holds():
    g = gen.load_function("bump:-1,1,0.6")
    for p in (1.5, 3.0):
        reps = hyper.improved_nelson_check(BUMP, g, p, 0.5, (0.05, 0.2))
        head, rest = reps[0], reps[1:]
        assert head.name == "improved_nelson_derivative" and head.ok
        assert head.deficit >= -(1e-4 + 3 * head.err)
        assert [r.params["t"] for r in rest] == [0.05, 0.2]
        assert all(r.params["diagnostic"] for r in rest)


def test_to_row_shape():
    row = hyper.to_row(hyper.nelson_check(LogLinear([1.0]), 2.0, 0.5))
    assert tuple(row) == hyper.CSV_COLUMNS and row["deriv_lhs"] == ""
    row = hyper.to_row(hyper.gross_derivative_check(BUMP, 2.0))
    assert row["lhs_norm"] == "" and row["t"] == 0.0
