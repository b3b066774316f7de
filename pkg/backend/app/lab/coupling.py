"""Max-coupling representation of the upper expectation for V = P(2 - P).

For this capacity the upper expectation of Y equals E_P[max(Z, Z')] with Z, Z' two
P-independent copies of Y. The joint checks below build P-i.i.d. products literally and
evaluate them through that identity.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence

from backend.app.core.config import get_settings
from backend.app.core.errors import CapabilityError, LabInputError
from backend.app.lab.laws import DiscreteDistribution, Transform
from backend.app.models.dto import DependenceResidual

logger = logging.getLogger(__name__)

ExpectationKind = Literal["max_coupling", "linear"]
MAX_SEQUENCE_LENGTH = 6


@dataclass(frozen=True)
class LawWithTransform:
    """A law together with a non-negative transform phi applied to it."""

    law: DiscreteDistribution
    transform: Transform

    def __post_init__(self) -> None:
        for value in self.law.values:
            image = float(self.transform(value))
            if not math.isfinite(image) or image < 0.0:
                raise LabInputError(
                    f"transform must be finite and non-negative on the support (phi({value})={image})"
                )


def max_coupling_expectation(law: DiscreteDistribution) -> float:
    """E_P[max(Z, Z')] = sum_j y_(j) (F(j)^2 - F(j-1)^2) over the sorted support."""
    if not law.values:
        raise LabInputError("empty support")
    merged = law.deduplicated()
    terms = []
    cdf_previous = 0.0
    cumulative: list[float] = []
    for value, weight in zip(merged.values, merged.weights):
        cumulative.append(weight)
        cdf = math.fsum(cumulative)
        # F(j)^2 - F(j-1)^2 = w_j (F(j) + F(j-1)) avoids cancellation
        terms.append(value * weight * (cdf + cdf_previous))
        cdf_previous = cdf
    return math.fsum(terms)


def _upper_expectation(law: DiscreteDistribution, expectation: ExpectationKind) -> float:
    if expectation == "linear":
        return law.linear_expectation()
    return max_coupling_expectation(law)


def _product_law(
    laws: Sequence[LawWithTransform], budget: int, copies: int
) -> DiscreteDistribution:
    """Law of prod_i phi_i(Y_i) for P-i.i.d. Y_i, enumerated over the product space."""
    support = laws[0].law.deduplicated()
    outcomes = len(support.values) ** (copies * len(laws))
    if outcomes > budget:
        logger.warning("product space of %d outcomes exceeds budget %d", outcomes, budget)
        raise CapabilityError(f"product space has {outcomes} outcomes; budget is {budget}")
    images = [
        [float(item.transform(value)) for value in support.values] for item in laws
    ]
    pairs = []
    for indices in itertools.product(range(len(support.values)), repeat=len(laws)):
        value = math.prod(images[i][j] for i, j in enumerate(indices))
        weight = math.prod(support.weights[j] for j in indices)
        pairs.append((value, weight))
    return DiscreteDistribution.from_pairs(pairs).deduplicated()


def negative_dependence_residual(
    laws: Sequence[LawWithTransform],
    expectation: ExpectationKind = "max_coupling",
) -> DependenceResidual:
    """Residual of E[phi_1..phi_n] E[phi_{n+1}] - E[phi_1..phi_{n+1}] for a P-i.i.d. sequence.

    With ``expectation="linear"`` the same construction runs under E_P, where the
    residual vanishes (independence).
    """
    if not 2 <= len(laws) <= MAX_SEQUENCE_LENGTH:
        raise LabInputError(f"sequence length must lie in 2..{MAX_SEQUENCE_LENGTH}")
    reference = laws[0].law
    if any(not item.law.same_law(reference) for item in laws[1:]):
        raise LabInputError("all variables must share the same underlying law (P-i.i.d.)")

    budget = get_settings().max_product_outcomes
    # the joint side pairs two copies of the whole (n+1)-block
    joint = _product_law(laws, budget, copies=2)
    head = _product_law(laws[:-1], budget, copies=2)
    tail = laws[-1].law.pushforward(laws[-1].transform)

    rhs = _upper_expectation(joint, expectation)
    lhs = _upper_expectation(head, expectation) * _upper_expectation(tail, expectation)
    return DependenceResidual(lhs=lhs, rhs=rhs)


def identical_distribution_check(law: DiscreteDistribution, transform: Transform) -> float:
    """|E[phi(Y_i)] - E[phi(Y_j)]| with both sides evaluated independently."""
    LawWithTransform(law=law, transform=transform)
    left = max_coupling_expectation(law.pushforward(transform))
    right = max_coupling_expectation(
        DiscreteDistribution(values=law.values, weights=law.weights).pushforward(transform)
    )
    return abs(left - right)
