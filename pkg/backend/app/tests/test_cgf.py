import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backend.app.core.errors import LabInputError
from backend.app.lab.cgf import (
    LOG_TWO,
    GammaApproximant,
    bernoulli_cgf,
    bernoulli_curve,
    binomial_log_table,
    gamma_curve,
    gamma_finite_n,
    lambda_chen_feng,
    lambda_curve,
)


def test_bernoulli_cgf_examples():
    assert bernoulli_cgf(0.5, 1.0) == pytest.approx(0.620115, abs=1e-6)
    assert bernoulli_cgf(0.3, 0.0) == 0.0
    assert bernoulli_cgf(0.5, -1.0) == pytest.approx(math.log((1 + math.exp(-1)) / 2), abs=1e-14)


def test_bernoulli_cgf_is_stable_for_large_lambda():
    assert bernoulli_cgf(0.5, 700.0) == pytest.approx(700.0 + math.log(0.5), abs=1e-9)
    assert bernoulli_cgf(0.5, -700.0) == pytest.approx(math.log(0.5), abs=1e-12)


@pytest.mark.parametrize("t", [0.0, 1.0, -0.1, 1.5])
def test_bernoulli_cgf_rejects_parameter(t):
    with pytest.raises(LabInputError):
        bernoulli_cgf(t, 1.0)


def test_lambda_branches():
    # p(2-p) = 0.75 above zero, p^2 = 0.25 below
    assert lambda_chen_feng(0.5, 1.0) == pytest.approx(math.log(0.25 + 0.75 * math.e), abs=1e-12)
    assert lambda_chen_feng(0.5, 1.0) == pytest.approx(0.827989, abs=1e-6)
    assert lambda_chen_feng(0.5, -1.0) == pytest.approx(math.log(0.75 + 0.25 / math.e), abs=1e-12)
    assert lambda_chen_feng(0.5, -1.0) == pytest.approx(-0.172011, abs=1e-6)
    assert lambda_chen_feng(0.5, 0.0) == 0.0


def test_lambda_negative_limit():
    assert lambda_chen_feng(0.5, -40.0) == pytest.approx(math.log(0.75), abs=1e-12)


def test_lambda_strictly_dominates_bernoulli_away_from_zero():
    for lam in np.round(np.arange(-5.0, 5.01, 0.5), 12):
        if lam == 0.0:
            continue
        assert lambda_chen_feng(0.5, float(lam)) > bernoulli_cgf(0.5, float(lam))


def test_gamma_one_sample_is_lambda():
    for lam in (-3.0, -0.5, 0.0, 0.5, 3.0):
        assert gamma_finite_n(0.4, lam, 1) == pytest.approx(lambda_chen_feng(0.4, lam), abs=1e-12)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.9])
def test_cgfs_vanish_exactly_at_zero(p):
    assert bernoulli_cgf(p, 0.0) == 0.0
    assert lambda_chen_feng(p, 0.0) == 0.0
    for n in (1, 10, 100, 5000):
        assert gamma_finite_n(p, 0.0, n) == 0.0


def test_bernoulli_cgf_is_accurate_near_zero():
    # ln(1 - t + t e^lam) = t lam + O(lam^2)
    assert bernoulli_cgf(0.5, 1e-10) == pytest.approx(0.5e-10, rel=1e-9)
    assert bernoulli_cgf(0.25, -1e-12) == pytest.approx(-0.25e-12, rel=1e-9)
    assert lambda_chen_feng(0.5, 1e-10) == pytest.approx(0.75e-10, rel=1e-9)


def test_bernoulli_cgf_is_continuous_across_branches():
    below = bernoulli_cgf(0.4, 30.0)
    above = bernoulli_cgf(0.4, 30.0 + 1e-9)
    assert above - below == pytest.approx(1e-9, rel=1e-3)
    assert below == pytest.approx(30.0 + math.log(0.4 + 0.6 * math.exp(-30.0)), abs=1e-12)


def test_gamma_sandwich_at_hundred():
    approximant = GammaApproximant(p=0.5, n=100)
    for lam in (-2.0, -0.5, 0.5, 2.0):
        lower, value, upper = approximant.sandwich(lam)
        assert lower - 1e-12 <= value <= upper + 1e-12
        assert upper - lower == pytest.approx(LOG_TWO / 100)


def test_gamma_is_dominated_by_lambda_on_grid():
    for p in (0.3, 0.5, 0.7):
        for n in (1, 10, 100, 1000):
            for lam in np.round(np.arange(-5.0, 5.01, 0.5), 12):
                assert gamma_finite_n(p, float(lam), n) <= lambda_chen_feng(p, float(lam)) + 1e-9


def test_gamma_rejects_bad_inputs():
    with pytest.raises(LabInputError):
        GammaApproximant(p=0.5, n=0)
    with pytest.raises(LabInputError):
        gamma_finite_n(1.0, 1.0, 10)


def test_curves_are_convex():
    grid = np.round(np.arange(-5.0, 5.01, 0.1), 12)
    assert bernoulli_curve(0.3).midpoint_convex(grid)
    assert lambda_curve(0.5).midpoint_convex(grid)
    assert gamma_curve(0.5, 50).midpoint_convex(grid)


def test_curve_outside_effective_domain_is_infinite():
    curve = bernoulli_curve(0.5)
    restricted = type(curve)(evaluate=curve.evaluate, effective_domain=(-1.0, 1.0))
    assert restricted(2.0) == math.inf
    assert restricted(0.5) == curve(0.5)


def test_binomial_table_edges():
    table = binomial_log_table(0.3, 1)
    assert table.log_at_least(0) == 0.0
    assert math.exp(table.log_at_least(1)) == pytest.approx(0.3, abs=1e-15)
    assert table.log_at_least(2) == -math.inf
    assert table.log_at_most(-1) == -math.inf
    assert table.log_at_most(1) == 0.0
    assert math.exp(table.log_at_most(0)) == pytest.approx(0.7, abs=1e-15)


def test_binomial_table_is_read_only():
    table = binomial_log_table(0.5, 20)
    for array in (table.log_pmf, table.log_cdf, table.log_sf):
        assert not array.flags.writeable
    with pytest.raises(ValueError):
        table.log_pmf[0] = 0.0


def test_binomial_table_rejects_empty_sample():
    with pytest.raises(LabInputError):
        binomial_log_table(0.5, 0)


@settings(max_examples=60, deadline=None)
@given(
    p=st.floats(min_value=0.05, max_value=0.95),
    lam=st.floats(min_value=-10.0, max_value=10.0),
    n=st.integers(min_value=1, max_value=300),
)
def test_gamma_sandwich_property(p, lam, n):
    lower, value, upper = GammaApproximant(p=p, n=n).sandwich(lam)
    assert lower - 1e-9 <= value <= upper + 1e-9


@pytest.mark.parametrize("lam", [-3.0, -1.0, -0.1, 0.1, 1.0, 3.0])
def test_gamma_limit_stays_strictly_below_lambda(lam):
    approximant = GammaApproximant(p=0.5, n=10000)
    lower, value, upper = approximant.sandwich(lam)
    assert lower - 1e-12 <= value <= upper + 1e-12
    limit = lambda_chen_feng(0.5, lam)
    assert limit - value >= 0.9 * (limit - lower)
