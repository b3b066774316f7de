"""Cumulant generating functions of the Bernoulli counterexample.

``bernoulli_cgf`` is the plain Bernoulli CGF, ``lambda_chen_feng`` the per-variable limit
built from the upper expectation, and ``gamma_finite_n`` the exact normalised log-MGF of
the sample sum under the same upper expectation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binom

from backend.app.core.errors import LabInputError

MAX_N = 1_000_000
LOG_TWO = math.log(2.0)
# t * expm1(lam) stays finite below this
EXPM1_LIMIT = 30.0


def _check_parameter(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise LabInputError(f"{name} must lie in (0, 1), got {value!r}")


def _log_add_exp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    high, low = (a, b) if a >= b else (b, a)
    return high + math.log1p(math.exp(low - high))


@dataclass(frozen=True)
class CgfCurve:
    """A convex function of lambda, finite on its effective domain."""

    evaluate: Callable[[float], float]
    effective_domain: Tuple[float, float] = (-math.inf, math.inf)
    label: str = "cgf"

    def __call__(self, lam: float) -> float:
        lo, hi = self.effective_domain
        if not lo <= lam <= hi:
            return math.inf
        return self.evaluate(lam)

    def midpoint_convex(self, grid: np.ndarray, tol: float = 1e-10) -> bool:
        """Midpoint inequality f((a+b)/2) <= (f(a)+f(b))/2 on consecutive grid pairs."""
        points = np.sort(np.asarray(grid, dtype=float))
        for left, right in zip(points[:-1], points[1:]):
            middle = 0.5 * (left + right)
            if self(middle) > 0.5 * (self(left) + self(right)) + tol:
                return False
        return True


def bernoulli_cgf(t: float, lam: float) -> float:
    """ln(1 - t + t e^lam); exactly 0 at lam = 0."""
    _check_parameter("t", t)
    if lam <= EXPM1_LIMIT:
        return math.log1p(t * math.expm1(lam))
    return _log_add_exp(math.log1p(-t), math.log(t) + lam)


def lambda_chen_feng(p: float, lam: float) -> float:
    """Per-variable limit: the p**2 branch for lam < 0, the p(2-p) branch for lam >= 0."""
    _check_parameter("p", p)
    t = p * p if lam < 0 else p * (2.0 - p)
    return bernoulli_cgf(t, lam)


@dataclass(frozen=True)
class BinomialLogTable:
    """Log pmf, log cdf and log survival (P(S > j)) of Binomial(n, p)."""

    p: float
    n: int
    log_pmf: np.ndarray = field(repr=False)
    log_cdf: np.ndarray = field(repr=False)
    log_sf: np.ndarray = field(repr=False)

    def log_at_least(self, j: int) -> float:
        """ln P(S >= j)."""
        if j <= 0:
            return 0.0
        if j > self.n:
            return -math.inf
        return float(self.log_sf[j - 1])

    def log_at_most(self, j: int) -> float:
        """ln P(S <= j)."""
        if j < 0:
            return -math.inf
        if j >= self.n:
            return 0.0
        return float(self.log_cdf[j])


@lru_cache(maxsize=64)
def binomial_log_table(p: float, n: int) -> BinomialLogTable:
    """Build (once per (p, n)) the immutable log-space binomial table."""
    _check_parameter("p", p)
    if not 1 <= n <= MAX_N:
        raise LabInputError(f"n must lie in 1..{MAX_N}")
    support = np.arange(n + 1)
    log_pmf = binom.logpmf(support, n, p)
    log_cdf = np.logaddexp.accumulate(log_pmf)
    # P(S > j) = sum_{k > j} pmf(k)
    reversed_tail = np.logaddexp.accumulate(log_pmf[::-1])[::-1]
    log_sf = np.append(reversed_tail[1:], -np.inf)
    log_cdf[-1] = 0.0
    for array in (log_pmf, log_cdf, log_sf):
        array.setflags(write=False)
    return BinomialLogTable(p=p, n=n, log_pmf=log_pmf, log_cdf=log_cdf, log_sf=log_sf)


def _max_order_log_weights(table: BinomialLogTable) -> np.ndarray:
    """ln P(max(S, S') = j) = ln pmf(j) + ln(F(j) + F(j-1))."""
    previous = np.concatenate(([-np.inf], table.log_cdf[:-1]))
    return table.log_pmf + np.logaddexp(table.log_cdf, previous)


def _min_order_log_weights(table: BinomialLogTable) -> np.ndarray:
    """ln P(min(S, S') = j) = ln pmf(j) + ln(P(S >= j) + P(S > j))."""
    at_least = np.concatenate(([0.0], table.log_sf[:-1]))
    return table.log_pmf + np.logaddexp(at_least, table.log_sf)


def gamma_finite_n(p: float, lam: float, n: int) -> float:
    """(1/n) ln E[exp(lam S_n)] under the max-coupling upper expectation.

    e^{lam s} is increasing in s for lam >= 0, so the max of two copies is driven by
    max(S, S'); for lam < 0 it is driven by min(S, S').
    """
    table = binomial_log_table(p, n)
    if lam == 0.0:
        return 0.0
    weights = _max_order_log_weights(table) if lam >= 0 else _min_order_log_weights(table)
    exponents = lam * np.arange(n + 1) + weights
    return float(logsumexp(exponents)) / n


@dataclass(frozen=True)
class GammaApproximant:
    """gamma_n for a fixed (p, n); its pointwise limit is the Bernoulli CGF at p."""

    p: float
    n: int

    def __post_init__(self) -> None:
        _check_parameter("p", self.p)
        if not 1 <= self.n <= MAX_N:
            raise LabInputError(f"n must lie in 1..{MAX_N}")

    def evaluate(self, lam: float) -> float:
        return gamma_finite_n(self.p, lam, self.n)

    def sandwich(self, lam: float) -> Tuple[float, float, float]:
        """(lower, value, upper) with lower = Lambda_p and upper = Lambda_p + ln2/n."""
        lower = bernoulli_cgf(self.p, lam)
        return lower, self.evaluate(lam), lower + LOG_TWO / self.n


def bernoulli_curve(t: float) -> CgfCurve:
    _check_parameter("t", t)
    return CgfCurve(evaluate=lambda lam: bernoulli_cgf(t, lam), label=f"bernoulli({t})")


def lambda_curve(p: float) -> CgfCurve:
    _check_parameter("p", p)
    return CgfCurve(evaluate=lambda lam: lambda_chen_feng(p, lam), label=f"lambda({p})")


def gamma_curve(p: float, n: int) -> CgfCurve:
    approximant = GammaApproximant(p=p, n=n)
    return CgfCurve(evaluate=approximant.evaluate, label=f"gamma_{n}({p})")
