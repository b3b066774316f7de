"""Exact finite-n large-deviation rates under V = P(2 - P) for the Bernoulli sequence.

Every probability here is a binomial lattice sum evaluated in log space, so rates are
exact up to floating point for n in the thousands. ``counterexample_report`` pits the
finite-n rates of an interval event against the true limit and the limit the refuted
LDP would predict; the bound checks turn the Cramer-type inequalities into exact
finite-n statements with explicit slack.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from backend.app.core.config import get_settings
from backend.app.core.errors import LabInputError
from backend.app.lab.cgf import LOG_TWO, binomial_log_table, gamma_finite_n, lambda_chen_feng
from backend.app.lab.extended import POS_INF, ExtendedReal, ext_min, negate
from backend.app.lab.fenchel import bernoulli_rate, corrected_rate
from backend.app.models.dto import (
    BoundReport,
    ChernoffReport,
    ChernoffRow,
    Figure1Row,
    IntervalModel,
    LdpReport,
    LdpRow,
)

logger = logging.getLogger(__name__)

BOUND_WINDOW = (-0.1, 1.1)


@dataclass(frozen=True)
class IntervalEvent:
    """{x : lower <(=) x <(=) upper}; infinite bounds are allowed."""

    lower: float
    upper: float
    lower_open: bool = False
    upper_open: bool = False

    def __post_init__(self) -> None:
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise LabInputError("interval bounds must not be NaN")
        if self.lower > self.upper:
            raise LabInputError(f"interval lower {self.lower!r} exceeds upper {self.upper!r}")

    @classmethod
    def open(cls, lower: float, upper: float) -> "IntervalEvent":
        return cls(lower, upper, lower_open=True, upper_open=True)

    @classmethod
    def closed(cls, lower: float, upper: float) -> "IntervalEvent":
        return cls(lower, upper)

    @classmethod
    def from_model(cls, model: IntervalModel) -> "IntervalEvent":
        return cls(model.lower, model.upper, model.lower_open, model.upper_open)

    @property
    def is_closed(self) -> bool:
        return not (self.lower_open or self.upper_open)

    def to_model(self) -> IntervalModel:
        return IntervalModel(
            lower=self.lower,
            upper=self.upper,
            lower_open=self.lower_open,
            upper_open=self.upper_open,
        )

    def lattice_range(self, n: int) -> Tuple[int, int]:
        """Inclusive (j_lo, j_hi) with j/n in the event; j_lo > j_hi when empty.

        Bounds are compared exactly: n * bound is formed as a Fraction of the decimal
        representation, so 0.2 * 5000 is exactly 1000.
        """
        if math.isinf(self.lower):
            j_lo = 0 if self.lower < 0 else n + 1
        else:
            scaled = Fraction(str(self.lower)) * n
            j_lo = math.floor(scaled) + 1 if self.lower_open else math.ceil(scaled)
        if math.isinf(self.upper):
            j_hi = n if self.upper > 0 else -1
        else:
            scaled = Fraction(str(self.upper)) * n
            j_hi = math.ceil(scaled) - 1 if self.upper_open else math.floor(scaled)
        return max(j_lo, 0), min(j_hi, n)

    def lattice_mask(self, n: int) -> np.ndarray:
        mask = np.zeros(n + 1, dtype=bool)
        j_lo, j_hi = self.lattice_range(n)
        if j_lo <= j_hi:
            mask[j_lo : j_hi + 1] = True
        return mask


Events = Union[IntervalEvent, Sequence[IntervalEvent]]


def _as_list(events: Events) -> List[IntervalEvent]:
    if isinstance(events, IntervalEvent):
        return [events]
    items = list(events)
    if not items:
        raise LabInputError("at least one interval is required")
    return items


def _union_mask(n: int, events: Iterable[IntervalEvent]) -> np.ndarray:
    mask = np.zeros(n + 1, dtype=bool)
    for event in events:
        mask |= event.lattice_mask(n)
    return mask


def log_union_prob(p: float, n: int, events: Events) -> float:
    """ln P(S_n / n in union of events), each lattice point counted once."""
    table = binomial_log_table(p, n)
    mask = _union_mask(n, _as_list(events))
    if not mask.any():
        return -math.inf
    return min(float(logsumexp(table.log_pmf[mask])), 0.0)


def log_interval_prob(p: float, n: int, event: IntervalEvent) -> float:
    """ln P(S_n / n in event); -inf for an empty lattice intersection."""
    return log_union_prob(p, n, [event])


def _capacity_log(q_log: float) -> float:
    """ln(q (2 - q)) from ln q; ln(2 - q) = ln 2 + log1p(-q/2) stays exact as q underflows."""
    q = math.exp(q_log)
    return q_log + LOG_TWO + math.log1p(-0.5 * q)


def finite_n_capacity_rate(p: float, n: int, events: Events) -> float:
    """(1/n) ln V(S_n / n in events) with V = P(2 - P); -inf (with a warning) when empty."""
    q_log = log_union_prob(p, n, events)
    if q_log == -math.inf:
        logger.warning("event has no lattice points at n=%d; rate reported as -inf", n)
        return -math.inf
    return _capacity_log(q_log) / n


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise LabInputError(f"p must lie in (0, 1), got {p!r}")


def _check_sizes(n_list: Sequence[int]) -> List[int]:
    sizes = sorted(set(int(n) for n in n_list))
    if not sizes:
        raise LabInputError("n_list must not be empty")
    if sizes[0] < 1:
        raise LabInputError("every n must be positive")
    return sizes


def counterexample_report(
    p: float,
    a: float,
    b: float,
    n_list: Sequence[int],
    tol_true: Optional[float] = None,
    sep_min: Optional[float] = None,
    n_min: Optional[int] = None,
) -> LdpReport:
    """Finite-n rates of V(mean in (a, b)) against -I_p(b) and the refuted -I_{p^2}(b).

    The verdict uses the largest n >= n_min: it passes when that rate is within
    ``tol_true`` of the true limit and at least ``sep_min`` away from the refuted one.
    Smaller n are reported but do not vote.
    """
    _check_p(p)
    if not 0.0 < a < b < p * p:
        raise LabInputError(f"need 0 < a < b < p^2 = {p * p!r}, got a={a!r}, b={b!r}")
    settings = get_settings()
    tol_true = settings.tol_true if tol_true is None else tol_true
    sep_min = settings.sep_min if sep_min is None else sep_min
    n_min = settings.n_min if n_min is None else n_min

    event = IntervalEvent.open(a, b)
    rows = []
    for n in _check_sizes(n_list):
        q_log = log_interval_prob(p, n, event)
        empty = q_log == -math.inf
        rate = finite_n_capacity_rate(p, n, event)
        rows.append(LdpRow(n=n, q_log=q_log, rate=rate, empty=empty))

    # I_p decreases on [0, p] and I_{p^2} on [0, p^2], so both infima over (a, b) sit at b
    target_true = -float(bernoulli_rate(p, b))  # type: ignore[arg-type]
    target_refuted = -float(bernoulli_rate(p * p, b))  # type: ignore[arg-type]

    voting = [row for row in rows if row.n >= n_min and not row.empty]
    decisive = voting[-1] if voting else None
    true_gap = refuted_gap = None
    verdict = "fail"
    if decisive is not None:
        true_gap = abs(decisive.rate - target_true)
        refuted_gap = abs(decisive.rate - target_refuted)
        if true_gap <= tol_true and refuted_gap >= sep_min:
            verdict = "pass"
    else:
        logger.warning("no row with n >= %d; verdict cannot pass", n_min)

    return LdpReport(
        p=p,
        a=a,
        b=b,
        rows=rows,
        target_true=target_true,
        target_refuted=target_refuted,
        tol_true=tol_true,
        sep_min=sep_min,
        n_min=n_min,
        decisive_n=decisive.n if decisive else None,
        true_gap=true_gap,
        refuted_gap=refuted_gap,
        verdict=verdict,
    )


def _infimum_over(
    rate, zero_set: Tuple[float, float], intervals: Iterable[Tuple[float, float]]
) -> ExtendedReal:
    """inf of a convex rate over closed intervals, given the interval where it vanishes.

    Parts outside [0, 1] carry rate +inf and are clipped away.
    """
    zero_lo, zero_hi = zero_set
    best: ExtendedReal = POS_INF
    for lower, upper in intervals:
        lower, upper = max(lower, 0.0), min(upper, 1.0)
        if lower > upper:
            continue
        if upper < zero_lo:
            value = rate(upper)
        elif lower > zero_hi:
            value = rate(lower)
        else:
            value = 0.0
        best = ext_min(best, value)
    return best


def _closed_hulls(events: Sequence[IntervalEvent]) -> List[Tuple[float, float]]:
    return [(event.lower, event.upper) for event in events]


def _intersect(
    hulls: Iterable[Tuple[float, float]], piece: Tuple[float, float]
) -> List[Tuple[float, float]]:
    out = []
    for lower, upper in hulls:
        lo, hi = max(lower, piece[0]), min(upper, piece[1])
        if lo <= hi:
            out.append((lo, hi))
    return out


def _corrected_infimum(p: float, hulls: List[Tuple[float, float]]) -> ExtendedReal:
    low, high = p * p, p * (2.0 - p)
    return _infimum_over(lambda x: corrected_rate(p, x), (low, high), hulls)


def upper_bound_check(p: float, F: Sequence[IntervalEvent], n: int) -> BoundReport:
    """Exact finite-n upper bound: rate(F) <= -inf_F I_p + ln(2(n+1))/n.

    V <= 2P and a union of at most n+1 lattice points each of probability at most
    exp(-n inf_F I_p) give the slack.
    """
    _check_p(p)
    events = _as_list(F)
    for event in events:
        if not event.is_closed:
            raise LabInputError("upper_bound_check takes closed intervals only")
        if event.lower < BOUND_WINDOW[0] or event.upper > BOUND_WINDOW[1]:
            raise LabInputError(f"closed intervals must lie within {BOUND_WINDOW}")
    hulls = _closed_hulls(events)
    rate = finite_n_capacity_rate(p, n, events)
    cramer = negate(_infimum_over(lambda x: bernoulli_rate(p, x), (p, p), hulls))
    corrected = negate(_corrected_infimum(p, hulls))
    slack = math.log(2.0 * (n + 1)) / n
    margin = math.inf if rate == -math.inf else cramer + slack - rate
    return BoundReport(
        kind="upper",
        p=p,
        n=n,
        intervals=[event.to_model() for event in events],
        rate=rate,
        cramer_bound=cramer,
        slack=slack,
        corrected_bound=corrected,
        margin=margin,
    )


def lower_bound_check(p: float, G: Sequence[IntervalEvent], n: int) -> BoundReport:
    """Exact finite-n lower bound: rate(G) >= -min_{j/n in G} I_p(j/n) - ln(n+1)/n.

    j is a mode of Binomial(n, j/n), so P(S_n = j) >= exp(-n I_p(j/n)) / (n+1), and
    V >= P. The corrected bound -inf_{G cap H} I is reported for comparison only, with H
    the exposed set (0, p^2) u (p(2-p), 1).
    """
    _check_p(p)
    events = _as_list(G)
    mask = _union_mask(n, events)
    rate = finite_n_capacity_rate(p, n, events)
    slack = math.log(n + 1) / n
    lattice = np.flatnonzero(mask)
    if lattice.size:
        best = min(float(bernoulli_rate(p, j / n)) for j in lattice)  # type: ignore[arg-type]
        cramer = -best
    else:
        cramer = -math.inf
    hulls = _closed_hulls(events)
    low, high = p * p, p * (2.0 - p)
    exposed = _intersect(hulls, (0.0, low)) + _intersect(hulls, (high, 1.0))
    corrected = negate(_corrected_infimum(p, exposed))
    margin = math.inf if cramer == -math.inf else rate - (cramer - slack)
    return BoundReport(
        kind="lower",
        p=p,
        n=n,
        intervals=[event.to_model() for event in events],
        rate=rate,
        cramer_bound=cramer,
        slack=slack,
        corrected_bound=corrected,
        margin=margin,
    )


def tightness_bound_check(
    p: float, c: float, lam_grid: Sequence[float], n_list: Sequence[int]
) -> ChernoffReport:
    """Chernoff chain (1/n) ln V(mean > c) <= gamma_n(lam) - lam c <= Lambda(lam) - lam c."""
    _check_p(p)
    if not c > p * (2.0 - p):
        raise LabInputError(f"c must exceed p(2-p) = {p * (2.0 - p)!r}, got {c!r}")
    lams = [float(lam) for lam in lam_grid]
    if not lams or any(lam <= 0.0 for lam in lams):
        raise LabInputError("lambda grid must be non-empty and strictly positive")
    event = IntervalEvent(c, math.inf, lower_open=True)
    rows = []
    for n in _check_sizes(n_list):
        lhs = finite_n_capacity_rate(p, n, event)
        for lam in lams:
            envelope = -lam * c + max(lambda_chen_feng(p, -lam), lambda_chen_feng(p, lam))
            rows.append(
                ChernoffRow(
                    n=n,
                    lam=lam,
                    lhs=lhs,
                    markov_bound=gamma_finite_n(p, lam, n) - lam * c,
                    chernoff_bound=lambda_chen_feng(p, lam) - lam * c,
                    envelope=envelope,
                )
            )
    return ChernoffReport(p=p, c=c, rows=rows)


def figure1_data(p: float, x_grid: Sequence[float]) -> List[Figure1Row]:
    """Rows (x, I_p(x), I(x)) on a grid inside [0, 1]."""
    _check_p(p)
    xs = [float(x) for x in x_grid]
    if any(not 0.0 <= x <= 1.0 for x in xs):
        raise LabInputError("figure1 grid must lie within [0, 1]")
    return [
        Figure1Row(
            x=x,
            I_p=float(bernoulli_rate(p, x)),  # type: ignore[arg-type]
            I=float(corrected_rate(p, x)),  # type: ignore[arg-type]
        )
        for x in xs
    ]
