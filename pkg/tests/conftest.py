from collections import OrderedDict

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from deficitlab import density as dens

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


# --------------------------------------------------------------------------
# shared strategies
# --------------------------------------------------------------------------


@st.composite
def spd_matrices(draw, d, lo=0.2, hi=4.0):
    """Symmetric positive definite d x d matrices with eigenvalues in [lo, hi]."""
    evals = draw(st.lists(st.floats(lo, hi), min_size=d, max_size=d))
    seed = draw(st.integers(0, 2**32 - 1))
    q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(d, d)))
    m = q @ np.diag(evals) @ q.T
    return 0.5 * (m + m.T)


@st.composite
def gaussians(draw, dims=(1, 2, 3), centered=False):
    d = draw(st.sampled_from(dims))
    cov = draw(spd_matrices(d))
    mean = np.zeros(d) if centered else np.array(draw(st.lists(st.floats(-2, 2), min_size=d, max_size=d)))
    return dens.gaussian(mean, cov)


@st.composite
def mixtures_1d(draw, k_max=3, centered=True):
    k = draw(st.integers(2, k_max))
    w = np.array(draw(st.lists(st.floats(0.1, 1.0), min_size=k, max_size=k)))
    mu = np.array(draw(st.lists(st.floats(-2.5, 2.5), min_size=k, max_size=k)))
    var = np.array(draw(st.lists(st.floats(0.15, 2.0), min_size=k, max_size=k)))
    X = dens.mixture(w / w.sum(), mu[:, None], var)
    return dens.center(X) if centered else X


# --------------------------------------------------------------------------
# acceptance summary: one pass/fail line per criterion
# --------------------------------------------------------------------------

_CRITERIA: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            n, title = m.args
            _CRITERIA.setdefault(n, {"title": title, "passed": True, "ran": False})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    entry = _CRITERIA[m.args[0]]
    if rep.when == "call" or rep.failed:
        entry["ran"] = True
        if rep.failed:
            entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["passed"] and e["ran"] else ("FAIL" if e["ran"] else "NOT RUN")
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {e['title']}")
