"""Fenchel-Legendre conjugates, Bernoulli rate functions and exposed points."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import rel_entr

from backend.app.core.config import get_settings
from backend.app.core.errors import LabInputError
from backend.app.lab.extended import POS_INF, ExtendedReal, is_infinite
from backend.app.models.dto import ExposedPointVerdict

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
CONCAVITY_SAMPLES = 9


@dataclass(frozen=True)
class ConjugateSearch:
    """Bracket-doubling + golden-section settings for sup_lam (lam x - f(lam))."""

    tol: float = 1e-10
    bound: float = 700.0
    start: float = 1.0

    @classmethod
    def from_settings(cls) -> "ConjugateSearch":
        settings = get_settings()
        return cls(tol=settings.conjugate_tol, bound=settings.bracket_bound)


@dataclass(frozen=True)
class RateProfile:
    """An extended-real rate function, finite on [0, 1]."""

    evaluate: Callable[[float], ExtendedReal]
    label: str = "rate"
    finite_region: tuple[float, float] = (0.0, 1.0)

    def __call__(self, x: float) -> ExtendedReal:
        return self.evaluate(x)


def _check_parameter(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise LabInputError(f"{name} must lie in (0, 1), got {value!r}")


def _expand(objective: Callable[[float], float], direction: float, opts: ConjugateSearch):
    """Double outward from ``start`` until the objective stops increasing.

    Returns (edge, unbounded) where ``unbounded`` means the bound was reached while the
    objective was still growing by more than the tolerance.
    """
    edge = direction * opts.start
    inner = edge / 2.0
    while objective(edge) > objective(inner):
        if abs(edge) >= opts.bound:
            growth = objective(edge) - objective(inner)
            return edge, growth > opts.tol
        inner, edge = edge, direction * min(abs(edge) * 2.0, opts.bound)
    return edge, False


def _golden_section_max(objective: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = objective(d)
    return max(objective(a), objective(b), fc, fd)


def _assert_concave(objective: Callable[[float], float], lo: float, hi: float, tol: float) -> None:
    samples = np.linspace(lo, hi, CONCAVITY_SAMPLES)
    values = [objective(float(s)) for s in samples]
    for left, middle, right in zip(values, values[1:], values[2:]):
        if middle < 0.5 * (left + right) - max(tol, 1e-9 * (1.0 + abs(middle))):
            raise LabInputError("conjugate objective is not concave; the function is not convex")


def fenchel_conjugate_numeric(
    f: Callable[[float], float], x: float, opts: Optional[ConjugateSearch] = None
) -> ExtendedReal:
    """sup_lam (lam x - f(lam)) by bracket doubling and golden-section search."""
    opts = opts or ConjugateSearch.from_settings()

    def objective(lam: float) -> float:
        return lam * x - f(lam)

    lo, lower_unbounded = _expand(objective, -1.0, opts)
    hi, upper_unbounded = _expand(objective, 1.0, opts)
    if lower_unbounded or upper_unbounded:
        return POS_INF
    _assert_concave(objective, lo, hi, opts.tol)
    return _golden_section_max(objective, lo, hi, opts.tol)


def bernoulli_rate(t: float, x: float) -> ExtendedReal:
    """x ln(x/t) + (1-x) ln((1-x)/(1-t)) on [0, 1], +inf elsewhere (0 ln 0 = 0)."""
    _check_parameter("t", t)
    if not 0.0 <= x <= 1.0:
        return POS_INF
    return float(rel_entr(x, t) + rel_entr(1.0 - x, 1.0 - t))


def corrected_rate(p: float, x: float) -> ExtendedReal:
    """Lambda* for the counterexample: I_{p^2} below p^2, 0 on [p^2, p(2-p)], I_{p(2-p)} above."""
    _check_parameter("p", p)
    low, high = p * p, p * (2.0 - p)
    if x < low:
        return bernoulli_rate(low, x)
    if x <= high:
        return 0.0
    return bernoulli_rate(high, x)


def bernoulli_rate_profile(t: float) -> RateProfile:
    _check_parameter("t", t)
    return RateProfile(evaluate=lambda x: bernoulli_rate(t, x), label=f"I_{t}")


def corrected_rate_profile(p: float) -> RateProfile:
    _check_parameter("p", p)
    return RateProfile(evaluate=lambda x: corrected_rate(p, x), label=f"I[{p}]")


def exposing_hyperplane(p: float, y: float) -> float:
    """Slope exposing y for the corrected rate, on either non-flat branch."""
    _check_parameter("p", p)
    low, high = p * p, p * (2.0 - p)
    if 0.0 < y < low:
        t = low
    elif high < y < 1.0:
        t = high
    else:
        raise LabInputError(f"y={y!r} lies in the flat region or outside (0, 1); it is not exposed")
    return math.log(y * (1.0 - t) / ((1.0 - y) * t))


def _separation_margin(
    rate: RateProfile, lam: float, y: float, grid: Sequence[float]
) -> tuple[float, Optional[float]]:
    """Smallest lam*y - I(y) - (lam*x - I(x)) over grid points x != y, and its argmin."""
    target = lam * y - float(rate(y))  # type: ignore[arg-type]
    best_margin, best_x = math.inf, None
    for x in grid:
        x = float(x)
        if abs(x - y) <= 1e-12:
            continue
        value = rate(x)
        if is_infinite(value):
            continue
        margin = target - (lam * x - float(value))  # type: ignore[arg-type]
        if margin < best_margin:
            best_margin, best_x = margin, x
    return best_margin, best_x


def _flat_witness(rate: RateProfile, y: float, grid: Sequence[float], tol: float) -> Optional[float]:
    """A grid point x != y with -I(x) equal to -I(y) (the only candidate slope is 0)."""
    level = rate(y)
    for x in grid:
        x = float(x)
        if abs(x - y) <= 1e-12:
            continue
        value = rate(x)
        if not is_infinite(value) and abs(float(value) - float(level)) <= tol:  # type: ignore[arg-type]
            return x
    return None


def default_grid() -> np.ndarray:
    return np.round(np.linspace(0.0, 1.0, 1001), 12)


def exposed_point_test(
    p: float, y: float, grid: Optional[Sequence[float]] = None
) -> ExposedPointVerdict:
    """Classify y as an exposed point of the corrected rate on a verification grid."""
    _check_parameter("p", p)
    grid = default_grid() if grid is None else grid
    margin_floor = get_settings().exposed_margin
    rate = corrected_rate_profile(p)
    low, high = p * p, p * (2.0 - p)

    if not 0.0 < y < 1.0:
        return ExposedPointVerdict(
            point=y, is_exposed=False, witness="I(y)=inf or y is a boundary point of [0, 1]"
        )
    if low <= y <= high:
        witness = _flat_witness(rate, y, grid, margin_floor)
        detail = (
            f"x={witness!r} attains the same value of lam*x - I(x) at lam=0"
            if witness is not None
            else "flat region: lam=0 is the only candidate and the grid holds no second point"
        )
        return ExposedPointVerdict(point=y, is_exposed=False, witness=detail)

    lam = exposing_hyperplane(p, y)
    margin, closest = _separation_margin(rate, lam, y, grid)
    if margin > margin_floor:
        return ExposedPointVerdict(
            point=y,
            is_exposed=True,
            hyperplane=lam,
            margin=margin,
            witness=f"strict separation on {len(grid)} grid points, tightest at x={closest!r}",
        )
    logger.warning("exposing slope %.6g for y=%.6g failed separation (margin %.3g)", lam, y, margin)
    return ExposedPointVerdict(
        point=y,
        is_exposed=False,
        hyperplane=lam,
        margin=margin,
        witness=f"separation margin {margin!r} at x={closest!r} is not strict",
    )


def gamma_exposed_point_test(
    p: float, y: float, grid: Optional[Sequence[float]] = None
) -> ExposedPointVerdict:
    """Exposed-point test for Gamma* = I_p, with the two side-conditions recorded as flags.

    The limit defining Gamma exists (sandwich bound) and Gamma is finite everywhere, so
    Gamma(t lam) < inf for every t > 1.
    """
    _check_parameter("p", p)
    grid = default_grid() if grid is None else grid
    margin_floor = get_settings().exposed_margin
    flags = {"limit_exists": True, "finite_beyond_hyperplane": True}
    if not 0.0 < y < 1.0:
        return ExposedPointVerdict(
            point=y, is_exposed=False, witness="I_p(y)=inf or boundary point", side_conditions=flags
        )
    rate = bernoulli_rate_profile(p)
    lam = math.log(y * (1.0 - p) / ((1.0 - y) * p))
    margin, closest = _separation_margin(rate, lam, y, grid)
    return ExposedPointVerdict(
        point=y,
        is_exposed=margin > margin_floor,
        hyperplane=lam,
        margin=margin,
        witness=f"tightest competitor x={closest!r}",
        side_conditions=flags,
    )
