import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from deficitlab import clt
from deficitlab import density as dens
from deficitlab import functionals as fn
from deficitlab.density import GaussianMixture, GridDensity
from deficitlab.errors import PreconditionViolated, UnsupportedEstimator

from .conftest import gaussians, mixtures_1d


def binomial_oracle(n, sep=1.0, var=0.25):
    """Exact law of U_n for the symmetric bimodal base, built from binomial weights.

    With Z = (±a + N(0, v)) / sqrt(a^2 + v), U_n is a mixture over k of
    N((2k - n) a / sqrt(n (a^2 + v)), v / (a^2 + v)) with Binomial(n, 1/2) weights.
    """
    s2 = sep**2 + var
    k = np.arange(n + 1)
    w = stats.binom.pmf(k, n, 0.5)
    means = ((2 * k - n) * sep / math.sqrt(n * s2))[:, None]
    return dens.mixture(w, means, np.full(n + 1, var / s2))


def test_bimodal_base_has_unit_variance():
    Z = clt.bimodal_unit_variance()
    mean, cov = dens.moments(Z)
    assert abs(mean[0]) < 1e-15 and cov[0, 0] == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13])
def test_normalized_sum_matches_binomial_oracle(n):
    U = clt.normalized_sum(clt.bimodal_unit_variance(), n)
    ref = binomial_oracle(n)
    x = np.linspace(-5, 5, 401)[:, None]
    assert np.max(np.abs(U.pdf(x) - ref.pdf(x))) < 1e-12


def test_normalized_sum_preserves_moments():
    Z = dens.center(dens.mixture([0.7, 0.3], [[0.0], [2.0]], [1.0, 0.25]))
    _, cov = dens.moments(Z)
    for n in (2, 3, 7):
        m, c = dens.moments(clt.normalized_sum(Z, n))
        assert abs(m[0]) < 1e-12 and c[0, 0] == pytest.approx(cov[0, 0], rel=1e-12)


@given(gaussians(centered=True), st.integers(1, 9))
def test_gaussian_base_is_a_fixed_point(Z, n):
    U = clt.normalized_sum(Z, n)
    assert U.n_components == 1
    assert np.allclose(U.covs[0], Z.covs[0], atol=1e-12)


def test_grid_fallback_tracks_exact_mixture():
    Z = clt.bimodal_unit_variance()
    exact = fn.rel_entropy(clt.normalized_sum(Z, 6))
    U = clt.normalized_sum(Z, 6, budget=4, grid_points=2**12)
    assert isinstance(U, GridDensity)
    assert fn.rel_entropy(U).value == pytest.approx(exact.value, abs=1e-5)


def test_preconditions():
    with pytest.raises(PreconditionViolated):
        clt.normalized_sum(dens.gaussian([1.0], 1.0), 2)
    with pytest.raises(UnsupportedEstimator):
        clt.normalized_sum(dens.sample(dens.standard_gaussian(1), 50, 0), 2)
    with pytest.raises(ValueError):
        clt.clt_trace(clt.bimodal_unit_variance(), 0)


def test_trace_values_match_oracle():
    trace = clt.clt_trace(clt.bimodal_unit_variance(), 6)
    for row in trace.rows:
        ref = fn.catalog(binomial_oracle(row.n))
        assert row.D.value == pytest.approx(ref.rel_entropy.value, abs=1e-8)
        assert row.I.value == pytest.approx(ref.rel_fisher.value, abs=1e-7)


def test_bimodal_trace_holds_and_decreases():
    trace = clt.clt_trace(clt.bimodal_unit_variance(), 12)
    assert trace.ok
    D = [r.D.value for r in trace.rows]
    assert all(a >= b for a, b in zip(D, D[1:]))
    assert D[0] > 0 and D[-1] < D[0] / 4
    assert all(isinstance(r, clt.CltRow) for r in trace.rows)


def test_trace_record_columns():
    rec = clt.clt_trace(clt.bimodal_unit_variance(), 2).rows[1].to_record()
    assert tuple(rec) == clt.CSV_COLUMNS and rec["n"] == 2


def test_fi_and_ent_forms_coincide():
    # with δ = I/2 - D the two forms reduce to the same inequality
    for row in clt.clt_trace(clt.bimodal_unit_variance(1.5, 0.3), 8).rows:
        assert row.fi_clt.deficit == pytest.approx(row.ent_clt.deficit, abs=1e-10)


@pytest.mark.parametrize("d", [1, 2])
def test_standard_gaussian_rows_are_zero(d):
    for r in clt.clt_trace(dens.standard_gaussian(d), 5).reports:
        assert abs(r.deficit) <= 1e-10


@pytest.mark.parametrize("s2", [0.5, 3.0])
def test_scaled_gaussian_slack_is_linear(s2):
    # U_n = Z, so the entCLT slack is exactly (n - 1) delta_LSI(Z)
    Z = dens.gaussian([0.0], s2)
    delta = 0.5 * (s2 - 1) ** 2 / s2 - 0.5 * (s2 - 1 - math.log(s2))
    assert delta > 0
    for row in clt.clt_trace(Z, 5).rows:
        assert row.ent_clt.deficit == pytest.approx((row.n - 1) * delta, abs=1e-12)
        assert abs(row.doubling.deficit) < 1e-12


def test_subadditivity_bimodal():
    Z = clt.bimodal_unit_variance()
    reps = clt.subadditivity_check(Z, clt.all_pairs(8))
    assert len(reps) == len(clt.all_pairs(8))
    assert all(r.ok for r in reps)


@given(mixtures_1d(k_max=2))
def test_subadditivity_property(Z):
    for r in clt.subadditivity_check(Z, [(1, 1), (1, 2), (2, 2)]):
        assert r.deficit >= -3 * r.err - 1e-9


def test_all_pairs():
    assert clt.all_pairs(4) == [(1, 1), (1, 2), (2, 2), (1, 3)]
    assert all(1 <= m <= n and m + n <= 8 for m, n in clt.all_pairs(8))


def test_sum_chain_caches_binary_steps():
    chain = clt.SumChain(clt.bimodal_unit_variance())
    U = chain[11]
    assert isinstance(U, GaussianMixture) and chain[11] is U
    assert {1, 2, 4, 8} <= set(chain._cache)
