"""Cross-module invariant suite behind ``cli verify``.

Every check returns a :class:`CheckResult` whose margin is non-negative exactly when the
invariant holds. Randomised instances draw from a single seeded numpy generator, so a
given seed always replays the same instances in the same order.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np

from backend.app.core.config import get_settings
from backend.app.lab.capacity import (
    DistortionCapacity,
    DualDistortion,
    FiniteSpace,
    SimpleRandomVariable,
    capacity_table,
    check_n_monotone,
    choquet_integral,
    dual_capacity,
    lower_distortion,
    upper_distortion,
    upper_expectation_core,
)
from backend.app.lab.cgf import (
    LOG_TWO,
    bernoulli_cgf,
    bernoulli_curve,
    gamma_curve,
    gamma_finite_n,
    lambda_chen_feng,
    lambda_curve,
)
from backend.app.lab.coupling import (
    LawWithTransform,
    identical_distribution_check,
    max_coupling_expectation,
    negative_dependence_residual,
)
from backend.app.lab.extended import is_infinite
from backend.app.lab.fenchel import (
    ConjugateSearch,
    bernoulli_rate,
    corrected_rate,
    exposed_point_test,
    fenchel_conjugate_numeric,
    gamma_exposed_point_test,
)
from backend.app.lab.grids import make_grid
from backend.app.lab.laws import DiscreteDistribution, normalised_weights
from backend.app.lab.ldp_lab import (
    IntervalEvent,
    counterexample_report,
    figure1_data,
    finite_n_capacity_rate,
    log_interval_prob,
    lower_bound_check,
    tightness_bound_check,
    upper_bound_check,
)
from backend.app.models.dto import CheckResult, VerifySummary

logger = logging.getLogger(__name__)

PARAMETERS = (0.1, 0.3, 0.5, 0.7, 0.9)
GAMMA_LAMBDAS = (-3.0, -1.0, -0.1, 0.1, 1.0, 3.0)
GAMMA_SIZES = (10, 100, 1000, 10000)
CHERNOFF_LAMBDAS = (0.5, 1.0, 2.0, 4.0)
CHERNOFF_SIZES = (100, 1000, 5000)
BOUND_INSTANCES = 50
BOUND_N = 2000

Check = Callable[[np.random.Generator], CheckResult]


def _result(name: str, margin: float, detail: str = "") -> CheckResult:
    return CheckResult(name=name, passed=margin >= 0.0, margin=margin, detail=detail)


def _random_space(rng: np.random.Generator, max_atoms: int) -> FiniteSpace:
    size = int(rng.integers(1, max_atoms + 1))
    weights = normalised_weights(rng.uniform(0.05, 1.0, size=size).tolist())
    return FiniteSpace(atoms=tuple(range(size)), weights=weights)


def _random_law(rng: np.random.Generator, max_support: int) -> DiscreteDistribution:
    size = int(rng.integers(1, max_support + 1))
    values = rng.choice(np.arange(-5, 6), size=size, replace=False)
    weights = normalised_weights(rng.uniform(0.05, 1.0, size=size).tolist())
    return DiscreteDistribution(values=tuple(float(v) for v in values), weights=weights)


def _power_capacity(space: FiniteSpace, power: int) -> DistortionCapacity:
    """V = 1 - (1 - P)^k, whose dual P^k is completely monotone."""
    return DistortionCapacity(
        base=space, distortion=DualDistortion(lambda x, k=power: x**k), name=f"power{power}"
    )


def check_core_oracle(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for _ in range(100):
        space = _random_space(rng, 6)
        power = int(rng.integers(2, 4))
        cap = (
            DistortionCapacity(base=space, distortion=upper_distortion, name="P(2-P)")
            if power == 2
            else _power_capacity(space, power)
        )
        rv = SimpleRandomVariable.from_values(space, rng.integers(-5, 6, size=space.size).tolist())
        worst = max(worst, abs(choquet_integral(cap, rv) - upper_expectation_core(cap, rv)))
    return _result("capacity.choquet_equals_core", 1e-12 - worst, f"max |diff|={worst:.3e}")


def check_dual_involution(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for _ in range(20):
        space = _random_space(rng, 6)
        cap = DistortionCapacity(base=space, distortion=upper_distortion, name="P(2-P)")
        twice = capacity_table(dual_capacity(dual_capacity(cap)))
        worst = max(worst, float(np.max(np.abs(twice - capacity_table(cap)))))
        squared = DistortionCapacity(base=space, distortion=lower_distortion, name="P^2")
        diff = capacity_table(dual_capacity(cap)) - capacity_table(squared)
        worst = max(worst, float(np.max(np.abs(diff))))
    return _result("capacity.dual_involution", 1e-12 - worst, f"max |diff|={worst:.3e}")


def check_square_monotone(rng: np.random.Generator) -> CheckResult:
    failures = 0
    for _ in range(10):
        space = _random_space(rng, 5)
        cap = DistortionCapacity(base=space, distortion=lower_distortion, name="P^2")
        for order in (2, 3):
            if order <= max(2, space.size) and not check_n_monotone(cap, order):
                failures += 1
    return _result("capacity.square_is_monotone", float(-failures), f"{failures} failing orders")


def check_choquet_sublinear(rng: np.random.Generator) -> CheckResult:
    worst = math.inf
    for _ in range(50):
        space = _random_space(rng, 6)
        cap = DistortionCapacity(base=space, distortion=upper_distortion, name="P(2-P)")
        x = rng.integers(-5, 6, size=space.size)
        y = rng.integers(-5, 6, size=space.size)
        shift, scale = float(rng.integers(-3, 4)), float(rng.integers(1, 4))
        ex = choquet_integral(cap, SimpleRandomVariable.from_values(space, x.tolist()))
        ey = choquet_integral(cap, SimpleRandomVariable.from_values(space, y.tolist()))
        exy = choquet_integral(cap, SimpleRandomVariable.from_values(space, (x + y).tolist()))
        shifted = choquet_integral(
            cap, SimpleRandomVariable.from_values(space, (scale * x + shift).tolist())
        )
        worst = min(worst, ex + ey - exy, -abs(shifted - (scale * ex + shift)))
    return _result("capacity.choquet_sublinear", worst + 1e-12, f"min slack={worst:.3e}")


def check_canonical_residual(rng: np.random.Generator) -> CheckResult:
    law = DiscreteDistribution.bernoulli(0.5)
    identity = LawWithTransform(law=law, transform=lambda x: x)
    residual = negative_dependence_residual([identity, identity]).residual
    return _result(
        "coupling.canonical_residual", 1e-12 - abs(residual - 0.125), f"residual={residual!r}"
    )


def check_random_residuals(rng: np.random.Generator) -> CheckResult:
    worst = math.inf
    for _ in range(200):
        support = int(rng.integers(1, 5))
        values = sorted(rng.choice(np.arange(0, 6), size=support, replace=False).tolist())
        weights = normalised_weights(rng.uniform(0.05, 1.0, size=support).tolist())
        law = DiscreteDistribution(values=tuple(float(v) for v in values), weights=weights)
        length = int(rng.integers(2, 5))
        items = []
        for _ in range(length):
            table = dict(zip(law.values, rng.uniform(0.0, 3.0, size=support).tolist()))
            items.append(LawWithTransform(law=law, transform=lambda x, t=table: t[x]))
        worst = min(worst, negative_dependence_residual(items).residual)
    return _result("coupling.negative_dependence", worst + 1e-12, f"min residual={worst:.3e}")


def check_coupling_vs_choquet(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for _ in range(50):
        law = _random_law(rng, 5)
        space = FiniteSpace.from_law(law)
        cap = DistortionCapacity(base=space, distortion=upper_distortion, name="P(2-P)")
        rv = SimpleRandomVariable.from_values(space, law.values)
        worst = max(worst, abs(max_coupling_expectation(law) - choquet_integral(cap, rv)))
        worst = max(worst, identical_distribution_check(law, lambda x: math.exp(x / 5.0)))
    return _result("coupling.max_coupling_is_choquet", 1e-12 - worst, f"max |diff|={worst:.3e}")


def check_exponential_moment(rng: np.random.Generator) -> CheckResult:
    """E[exp(delta |X|)] <= exp(delta) for the bounded Bernoulli variables."""
    worst = math.inf
    for p in PARAMETERS:
        law = DiscreteDistribution.bernoulli(p)
        for delta in (0.1, 0.5, 1.0, 2.0):
            value = max_coupling_expectation(law.pushforward(lambda x, d=delta: math.exp(d * abs(x))))
            worst = min(worst, math.exp(delta) - value)
    return _result("coupling.exponential_moment", worst + 1e-12, f"min slack={worst:.3e}")


def check_single_step(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for p in PARAMETERS:
        law = DiscreteDistribution.bernoulli(p)
        for lam in (-2.0, -0.5, 0.0, 0.5, 1.0, 2.0):
            upper = max_coupling_expectation(law.pushforward(lambda x, l=lam: math.exp(l * x)))
            worst = max(worst, abs(math.log(upper) - lambda_chen_feng(p, lam)))
            worst = max(worst, abs(gamma_finite_n(p, lam, 1) - lambda_chen_feng(p, lam)))
    return _result("cgf.single_step_identity", 1e-12 - worst, f"max |diff|={worst:.3e}")


def check_gamma_sandwich(rng: np.random.Generator) -> CheckResult:
    worst = math.inf
    for lam in GAMMA_LAMBDAS:
        lower = bernoulli_cgf(0.5, lam)
        for n in GAMMA_SIZES:
            value = gamma_finite_n(0.5, lam, n)
            worst = min(worst, value - lower, lower + LOG_TWO / n - value)
    return _result("cgf.gamma_sandwich", worst + 1e-12, f"min slack={worst:.3e}")


def check_gamma_domination(rng: np.random.Generator) -> CheckResult:
    worst = math.inf
    for lam in GAMMA_LAMBDAS:
        upper = lambda_chen_feng(0.5, lam)
        for n in GAMMA_SIZES:
            worst = min(worst, upper - gamma_finite_n(0.5, lam, n))
        gap = upper - gamma_finite_n(0.5, lam, GAMMA_SIZES[-1])
        worst = min(worst, gap - 0.9 * (upper - bernoulli_cgf(0.5, lam)))
    return _result("cgf.gamma_below_lambda", worst + 1e-12, f"min slack={worst:.3e}")


def check_convexity(rng: np.random.Generator) -> CheckResult:
    grid = make_grid(-5.0, 5.0, 0.05)
    curves = [bernoulli_curve(0.3), lambda_curve(0.5), gamma_curve(0.5, 100)]
    failing = [curve.label for curve in curves if not curve.midpoint_convex(grid)]
    monotone = all(
        bernoulli_cgf(0.2, lam) <= bernoulli_cgf(0.6, lam)
        if lam > 0
        else bernoulli_cgf(0.2, lam) >= bernoulli_cgf(0.6, lam)
        for lam in grid
        if lam != 0.0
    )
    if not monotone:
        failing.append("bernoulli monotone in t")
    return _result("cgf.convexity", float(-len(failing)), ", ".join(failing) or "all convex")


def _conjugate_error(evaluate, rate, grid: Sequence[float], opts: ConjugateSearch) -> float:
    worst = 0.0
    for x in grid:
        numeric = fenchel_conjugate_numeric(evaluate, float(x), opts)
        exact = rate(float(x))
        if is_infinite(numeric) or is_infinite(exact):
            if not (is_infinite(numeric) and is_infinite(exact)):
                return math.inf
            continue
        worst = max(worst, abs(float(numeric) - float(exact)))  # type: ignore[arg-type]
    return worst


def check_conjugates(rng: np.random.Generator) -> CheckResult:
    opts = ConjugateSearch.from_settings()
    dense = make_grid(-0.1, 1.1, 0.001)
    coarse = make_grid(-0.1, 1.1, 0.005)
    worst = 0.0
    for p in PARAMETERS:
        worst = max(
            worst,
            _conjugate_error(lambda lam, p=p: lambda_chen_feng(p, lam), lambda x, p=p: corrected_rate(p, x), dense, opts),
            _conjugate_error(lambda lam, p=p: bernoulli_cgf(p, lam), lambda x, p=p: bernoulli_rate(p, x), coarse, opts),
        )
    return _result("fenchel.conjugate_identity", 1e-8 - worst, f"max |diff|={worst:.3e}")


def check_exposed_set(rng: np.random.Generator) -> CheckResult:
    p = 0.5
    low, high = p * p, p * (2.0 - p)
    mismatches: List[float] = []
    tightest = math.inf
    for y in make_grid(0.0, 1.0, 0.001):
        verdict = exposed_point_test(p, float(y))
        expected = 0.0 < y < low or high < y < 1.0
        if verdict.is_exposed != expected:
            mismatches.append(float(y))
        if verdict.is_exposed and verdict.margin is not None:
            tightest = min(tightest, verdict.margin)
    margin = float(-len(mismatches)) if mismatches else tightest - get_settings().exposed_margin
    return _result("fenchel.exposed_set", margin, f"mismatches={mismatches[:5]}, tightest={tightest:.3e}")


def check_gamma_exposed(rng: np.random.Generator) -> CheckResult:
    misses = [
        float(y)
        for y in make_grid(0.01, 0.99, 0.01)
        if not gamma_exposed_point_test(0.5, float(y)).is_exposed
    ]
    return _result("fenchel.gamma_star_exposed", float(-len(misses)), f"not exposed: {misses[:5]}")


def check_rate_ordering(rng: np.random.Generator) -> CheckResult:
    worst = math.inf
    for p in PARAMETERS:
        for row in figure1_data(p, make_grid(0.0, 1.0, 0.001)):
            worst = min(worst, row.I_p - row.I)
    for b in make_grid(0.05, 0.2, 0.05):
        gap = abs(float(bernoulli_rate(0.25, b)) - float(bernoulli_rate(0.5, b)))  # type: ignore[arg-type]
        worst = min(worst, gap - 0.01)
    return _result("fenchel.rate_ordering", worst, f"min slack={worst:.3e}")


def check_figure1(rng: np.random.Generator) -> CheckResult:
    problems = []
    for row in figure1_data(0.5, make_grid(0.0, 1.0, 0.001)):
        in_flat = 0.25 <= row.x <= 0.75
        if (row.I == 0.0) != in_flat:
            problems.append(f"I at {row.x}")
        if (row.I_p == 0.0) != (row.x == 0.5):
            problems.append(f"I_p at {row.x}")
        if row.I > row.I_p:
            problems.append(f"order at {row.x}")
    return _result("ldp_lab.figure1", float(-len(problems)), ", ".join(problems[:5]))


def check_counterexample(rng: np.random.Generator) -> CheckResult:
    settings = get_settings()
    report = counterexample_report(0.5, 0.05, 0.2, [500, 1000, 5000])
    if report.true_gap is None or report.refuted_gap is None:
        return _result("ldp_lab.counterexample", -1.0, "no decisive row")
    margin = min(settings.tol_true - report.true_gap, report.refuted_gap - settings.sep_min)
    by_n = {row.n: row.rate for row in report.rows}
    drift = abs(by_n[1000] - report.target_true) + 0.005 - abs(by_n[5000] - report.target_true)
    refutation = min(abs(rate - report.target_refuted) for rate in by_n.values()) - 0.15
    return _result(
        "ldp_lab.counterexample",
        min(margin, drift, refutation),
        f"verdict={report.verdict} r_5000={by_n[5000]:.6f}",
    )


def check_capacity_factor(rng: np.random.Generator) -> CheckResult:
    worst = math.inf
    for n in (10, 100, 1000):
        for event in (IntervalEvent.open(0.05, 0.2), IntervalEvent.closed(0.0, 1.0)):
            q_log = log_interval_prob(0.5, n, event)
            worst = min(worst, LOG_TWO / n - abs(finite_n_capacity_rate(0.5, n, event) - q_log / n))
    return _result("ldp_lab.capacity_factor", worst + 1e-15, f"min slack={worst:.3e}")


def check_chernoff(rng: np.random.Generator) -> CheckResult:
    worst = math.inf
    broken = 0
    for c in (0.8, 0.9):
        report = tightness_bound_check(0.5, c, CHERNOFF_LAMBDAS, CHERNOFF_SIZES)
        broken += sum(1 for row in report.rows if not row.holds)
        worst = min(worst, min(row.margin for row in report.rows))
    margin = float(-broken) if broken else worst
    return _result("ldp_lab.chernoff_chain", margin, f"min margin={worst:.3e}")


def _random_union(rng: np.random.Generator, closed: bool) -> List[IntervalEvent]:
    events = []
    for _ in range(int(rng.integers(1, 4))):
        lower = round(float(rng.uniform(-0.1, 1.1)), 4)
        upper = round(float(rng.uniform(lower, 1.1)), 4)
        if closed:
            events.append(IntervalEvent.closed(lower, upper))
        else:
            events.append(IntervalEvent.open(lower, upper + 1e-3))
    return events


def check_upper_bounds(rng: np.random.Generator) -> CheckResult:
    worst = math.inf
    for p in (0.3, 0.5, 0.7):
        for _ in range(BOUND_INSTANCES):
            report = upper_bound_check(p, _random_union(rng, closed=True), BOUND_N)
            worst = min(worst, report.margin)
    return _result("ldp_lab.upper_bound", worst, f"min margin={worst:.3e}")


def check_lower_bounds(rng: np.random.Generator) -> CheckResult:
    worst = math.inf
    for p in (0.3, 0.5, 0.7):
        for _ in range(20):
            report = lower_bound_check(p, _random_union(rng, closed=False), BOUND_N)
            worst = min(worst, report.margin)
    return _result("ldp_lab.lower_bound", worst, f"min margin={worst:.3e}")


CHECKS: Sequence[Check] = (
    check_core_oracle,
    check_dual_involution,
    check_square_monotone,
    check_choquet_sublinear,
    check_canonical_residual,
    check_random_residuals,
    check_coupling_vs_choquet,
    check_exponential_moment,
    check_single_step,
    check_gamma_sandwich,
    check_gamma_domination,
    check_convexity,
    check_conjugates,
    check_exposed_set,
    check_gamma_exposed,
    check_rate_ordering,
    check_figure1,
    check_counterexample,
    check_capacity_factor,
    check_chernoff,
    check_upper_bounds,
    check_lower_bounds,
)


def run_suite(seed: Optional[int] = None, checks: Sequence[Check] = CHECKS) -> VerifySummary:
    """Run every check against one seeded generator and collect the results in order."""
    seed = get_settings().verify_seed if seed is None else seed
    rng = np.random.default_rng(seed)
    results = []
    for check in checks:
        result = check(rng)
        if result.passed:
            logger.info("check %s passed (margin %.3e)", result.name, result.margin)
        else:
            logger.error("check %s FAILED (margin %.3e): %s", result.name, result.margin, result.detail)
        results.append(result)
    return VerifySummary(seed=seed, checks=results)
