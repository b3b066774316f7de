import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backend.app.core.errors import CapabilityError, LabInputError
from backend.app.lab.capacity import (
    DistortionCapacity,
    FiniteSpace,
    SimpleRandomVariable,
    choquet_integral,
    upper_distortion,
)
from backend.app.lab.coupling import (
    LawWithTransform,
    identical_distribution_check,
    max_coupling_expectation,
    negative_dependence_residual,
)
from backend.app.lab.laws import DiscreteDistribution, normalised_weights

laws = st.lists(
    st.tuples(st.integers(-5, 5), st.floats(min_value=0.05, max_value=1.0)),
    min_size=1,
    max_size=4,
    unique_by=lambda pair: pair[0],
).map(
    lambda pairs: DiscreteDistribution(
        values=tuple(float(v) for v, _ in pairs),
        weights=normalised_weights([w for _, w in pairs]),
    )
)


def _identity(law):
    return LawWithTransform(law=law, transform=lambda x: x)


def test_max_coupling_bernoulli_half():
    assert max_coupling_expectation(DiscreteDistribution.bernoulli(0.5)) == pytest.approx(0.75)


def test_max_coupling_point_mass():
    assert max_coupling_expectation(DiscreteDistribution.point_mass(2.5)) == 2.5


def test_max_coupling_exponential_transform():
    law = DiscreteDistribution.bernoulli(0.5).pushforward(math.exp)
    assert max_coupling_expectation(law) == pytest.approx(0.25 + 0.75 * math.e, abs=1e-12)


def test_canonical_residual():
    law = DiscreteDistribution.bernoulli(0.5)
    result = negative_dependence_residual([_identity(law), _identity(law)])
    assert result.lhs == pytest.approx(0.5625, abs=1e-12)
    assert result.rhs == pytest.approx(0.4375, abs=1e-12)
    assert result.residual == pytest.approx(0.125, abs=1e-12)


def test_zero_transform_annihilates_both_sides():
    law = DiscreteDistribution.bernoulli(0.3)
    zero = LawWithTransform(law=law, transform=lambda x: 0.0)
    result = negative_dependence_residual([_identity(law), zero])
    assert result.lhs == 0.0
    assert result.rhs == 0.0
    assert result.residual == 0.0


def test_exponential_transforms_are_negatively_dependent():
    law = DiscreteDistribution.bernoulli(0.3)
    item = LawWithTransform(law=law, transform=math.exp)
    assert negative_dependence_residual([item, item, item]).residual >= -1e-12


def test_linear_expectation_gives_independence():
    law = DiscreteDistribution.bernoulli(0.4)
    item = LawWithTransform(law=law, transform=lambda x: 1.0 + 2.0 * x)
    result = negative_dependence_residual([item, item, item], expectation="linear")
    assert result.residual == pytest.approx(0.0, abs=1e-12)


def test_residual_rejects_mismatched_laws():
    with pytest.raises(LabInputError):
        negative_dependence_residual(
            [_identity(DiscreteDistribution.bernoulli(0.3)), _identity(DiscreteDistribution.bernoulli(0.4))]
        )


@pytest.mark.parametrize("length", [1, 7])
def test_residual_rejects_bad_lengths(length):
    item = _identity(DiscreteDistribution.bernoulli(0.5))
    with pytest.raises(LabInputError):
        negative_dependence_residual([item] * length)


def test_negative_transform_rejected():
    with pytest.raises(LabInputError):
        LawWithTransform(law=DiscreteDistribution.bernoulli(0.5), transform=lambda x: x - 1.0)


def test_product_budget_is_enforced(lab_env):
    lab_env({"LDP_LAB_MAX_PRODUCT_OUTCOMES": "10"})
    item = _identity(DiscreteDistribution.bernoulli(0.5))
    with pytest.raises(CapabilityError):
        negative_dependence_residual([item, item, item])


def test_identical_distribution_examples():
    assert identical_distribution_check(DiscreteDistribution.bernoulli(0.5), lambda x: x) <= 1e-14
    assert identical_distribution_check(DiscreteDistribution.bernoulli(0.3), math.exp) <= 1e-14
    assert identical_distribution_check(DiscreteDistribution.point_mass(4.0), math.sqrt) <= 1e-14


def test_empty_support_rejected():
    with pytest.raises(LabInputError):
        DiscreteDistribution(values=(), weights=())


@settings(max_examples=60, deadline=None)
@given(law=laws)
def test_max_coupling_dominates_linear(law):
    upper = max_coupling_expectation(law)
    linear = law.linear_expectation()
    assert upper >= linear - 1e-12
    if min(law.values) >= 0:
        assert upper <= 2 * linear + 1e-12


@settings(max_examples=60, deadline=None)
@given(law=laws)
def test_max_coupling_is_choquet_against_upper_capacity(law):
    space = FiniteSpace.from_law(law)
    cap = DistortionCapacity(base=space, distortion=upper_distortion)
    rv = SimpleRandomVariable.from_values(space, law.values)
    assert max_coupling_expectation(law) == pytest.approx(choquet_integral(cap, rv), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    law=laws.filter(lambda law: min(law.values) >= 0),
    data=st.data(),
)
def test_random_residuals_are_nonnegative(law, data):
    length = data.draw(st.integers(min_value=2, max_value=4))
    items = []
    for _ in range(length):
        images = data.draw(
            st.lists(
                st.floats(min_value=0.0, max_value=3.0),
                min_size=len(law.values),
                max_size=len(law.values),
            )
        )
        table = dict(zip(law.values, images))
        items.append(LawWithTransform(law=law, transform=lambda x, t=table: t[x]))
    assert negative_dependence_residual(items).residual >= -1e-12
