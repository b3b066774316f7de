import math

import numpy as np
import pytest

from backend.app.lab import verify
from backend.app.models.dto import CheckResult

FAST_CHECKS = (
    verify.check_core_oracle,
    verify.check_dual_involution,
    verify.check_canonical_residual,
    verify.check_random_residuals,
    verify.check_coupling_vs_choquet,
    verify.check_single_step,
    verify.check_gamma_sandwich,
    verify.check_gamma_domination,
    verify.check_counterexample,
    verify.check_capacity_factor,
    verify.check_chernoff,
)


@pytest.mark.parametrize("check", FAST_CHECKS, ids=lambda check: check.__name__)
def test_fast_checks_pass(check):
    result = check(np.random.default_rng(42))
    assert result.passed, result.detail
    assert result.margin >= 0.0


def test_gamma_checks_pass_on_default_seed():
    summary = verify.run_suite(
        seed=42, checks=(verify.check_gamma_sandwich, verify.check_gamma_domination)
    )
    assert summary.passed, [check.detail for check in summary.checks]


@pytest.mark.parametrize(
    "check", [verify.check_figure1, verify.check_square_monotone], ids=lambda check: check.__name__
)
def test_counting_checks_report_positive_zero(check):
    result = check(np.random.default_rng(42))
    assert result.passed
    assert result.margin == 0.0
    assert math.copysign(1.0, result.margin) == 1.0
    assert "-0" not in result.model_dump_json()


def test_bound_checks_pass_on_seeded_unions():
    rng = np.random.default_rng(42)
    assert verify.check_upper_bounds(rng).passed
    assert verify.check_lower_bounds(rng).passed


def test_run_suite_is_deterministic():
    first = verify.run_suite(seed=3, checks=FAST_CHECKS[:4])
    second = verify.run_suite(seed=3, checks=FAST_CHECKS[:4])
    assert first == second
    assert [check.name for check in first.checks] == [check.name for check in second.checks]
    assert first.seed == 3


def test_run_suite_reports_failures(caplog):
    def failing(rng):
        return CheckResult(name="always.fails", passed=False, margin=-1.0, detail="forced")

    summary = verify.run_suite(seed=1, checks=[verify.check_canonical_residual, failing])
    assert not summary.passed
    assert [check.passed for check in summary.checks] == [True, False]
    assert "always.fails FAILED" in caplog.text


def test_run_suite_defaults_to_configured_seed(lab_env):
    lab_env({"LDP_LAB_VERIFY_SEED": "11"})
    assert verify.run_suite(checks=[verify.check_canonical_residual]).seed == 11


@pytest.mark.slow
def test_full_suite_passes():
    summary = verify.run_suite(seed=42)
    failed = [check.name for check in summary.checks if not check.passed]
    assert failed == []
    assert len(summary.checks) == len(verify.CHECKS)
