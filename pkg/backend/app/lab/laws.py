"""Finite-support probability laws."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Tuple

from backend.app.core.errors import LabInputError

WEIGHT_TOL = 1e-12

Transform = Callable[[float], float]


@dataclass(frozen=True)
class DiscreteDistribution:
    """A probability law with finite support given as (value, weight) pairs."""

    values: Tuple[float, ...]
    weights: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise LabInputError("a distribution needs at least one support point")
        if len(self.values) != len(self.weights):
            raise LabInputError("values and weights must have the same length")
        if any(not math.isfinite(value) for value in self.values):
            raise LabInputError("support values must be finite")
        if any(weight < 0.0 or not math.isfinite(weight) for weight in self.weights):
            raise LabInputError("weights must be finite and non-negative")
        total = math.fsum(self.weights)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise LabInputError(f"weights must sum to 1 (got {total!r})")

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[float, float]]) -> "DiscreteDistribution":
        """Build a law from (value, weight) pairs."""
        items = list(pairs)
        return cls(
            values=tuple(float(value) for value, _ in items),
            weights=tuple(float(weight) for _, weight in items),
        )

    @classmethod
    def bernoulli(cls, p: float) -> "DiscreteDistribution":
        """Bernoulli(p) on {0, 1}."""
        if not 0.0 <= p <= 1.0:
            raise LabInputError("Bernoulli parameter must lie in [0, 1]")
        return cls(values=(0.0, 1.0), weights=(1.0 - p, p))

    @classmethod
    def point_mass(cls, value: float) -> "DiscreteDistribution":
        return cls(values=(float(value),), weights=(1.0,))

    def deduplicated(self) -> "DiscreteDistribution":
        """Merge equal support values (exact equality), sorted increasingly."""
        merged: dict[float, list[float]] = {}
        for value, weight in zip(self.values, self.weights):
            merged.setdefault(value, []).append(weight)
        ordered = sorted(merged)
        return DiscreteDistribution(
            values=tuple(ordered),
            weights=tuple(math.fsum(merged[value]) for value in ordered),
        )

    def pushforward(self, transform: Transform) -> "DiscreteDistribution":
        """Law of transform(Y) for Y with this law."""
        return DiscreteDistribution(
            values=tuple(float(transform(value)) for value in self.values),
            weights=self.weights,
        ).deduplicated()

    def linear_expectation(self) -> float:
        """Plain expectation under the law."""
        return math.fsum(value * weight for value, weight in zip(self.values, self.weights))

    def same_law(self, other: "DiscreteDistribution", tol: float = WEIGHT_TOL) -> bool:
        """True when both describe the same law after deduplication."""
        left, right = self.deduplicated(), other.deduplicated()
        if left.values != right.values:
            return False
        return all(abs(a - b) <= tol for a, b in zip(left.weights, right.weights))


def normalised_weights(raw: Sequence[float]) -> Tuple[float, ...]:
    """Scale non-negative raw weights so they sum to one (used by random instances)."""
    total = math.fsum(raw)
    if total <= 0.0:
        raise LabInputError("at least one weight must be positive")
    scaled = [weight / total for weight in raw]
    # push the rounding residue onto the largest entry so fsum hits 1 exactly
    residue = 1.0 - math.fsum(scaled)
    largest = max(range(len(scaled)), key=scaled.__getitem__)
    scaled[largest] += residue
    return tuple(scaled)
