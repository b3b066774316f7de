"""Finite probability spaces, distortion capacities and their Choquet integrals.

Events are bitmasks over the ordered atom list: bit ``i`` set means atom ``i`` belongs to
the event. Exhaustive enumeration is therefore limited to small spaces (see
``LabSettings.max_enum_atoms``).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Hashable, Iterable, Mapping, Sequence, Tuple

import numpy as np

from backend.app.core.config import get_settings
from backend.app.core.errors import CapabilityError, LabInputError
from backend.app.lab.laws import DiscreteDistribution

logger = logging.getLogger(__name__)

Distortion = Callable[[float], float]
DISTORTION_GRID_POINTS = 1001


def upper_distortion(x: float) -> float:
    """g(x) = x(2 - x); g∘P is the upper probability of the counterexample."""
    return x * (2.0 - x)


def lower_distortion(x: float) -> float:
    """g(x) = x**2; g∘P is the lower (dual) probability."""
    return x * x


def identity_distortion(x: float) -> float:
    return x


@dataclass(frozen=True)
class DualDistortion:
    """x -> 1 - g(1 - x)."""

    inner: Distortion

    def __call__(self, x: float) -> float:
        return 1.0 - self.inner(1.0 - x)


@dataclass(frozen=True)
class FiniteSpace:
    """A finite probability space (atoms, P)."""

    atoms: Tuple[Hashable, ...]
    weights: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise LabInputError("a finite space needs at least one atom")
        if len(self.atoms) != len(self.weights):
            raise LabInputError("atoms and weights must have the same length")
        if len(set(self.atoms)) != len(self.atoms):
            raise LabInputError("atom labels must be distinct")
        if any(weight < 0.0 or not math.isfinite(weight) for weight in self.weights):
            raise LabInputError("weights must be finite and non-negative")
        total = math.fsum(self.weights)
        if abs(total - 1.0) > 1e-12:
            raise LabInputError(f"weights must sum to 1 (got {total!r})")

    @classmethod
    def uniform(cls, size: int) -> "FiniteSpace":
        return cls(atoms=tuple(range(size)), weights=tuple([1.0 / size] * size))

    @classmethod
    def from_law(cls, law: DiscreteDistribution) -> "FiniteSpace":
        """Atoms indexed 0..k-1 carrying the law's weights."""
        return cls(atoms=tuple(range(len(law.values))), weights=law.weights)

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def mask_of(self, event: Iterable[Hashable]) -> int:
        """Bitmask of an event given as a collection of atom labels."""
        index = {atom: position for position, atom in enumerate(self.atoms)}
        mask = 0
        for atom in event:
            if atom not in index:
                raise LabInputError(f"unknown atom label {atom!r}")
            mask |= 1 << index[atom]
        return mask

    def probability(self, mask: int) -> float:
        return math.fsum(w for i, w in enumerate(self.weights) if mask >> i & 1)


@dataclass(frozen=True)
class DistortionCapacity:
    """V = g∘P over a finite space."""

    base: FiniteSpace
    distortion: Distortion
    name: str = "custom"

    def __post_init__(self) -> None:
        g = self.distortion
        if abs(g(0.0)) > 1e-12 or abs(g(1.0) - 1.0) > 1e-12:
            raise LabInputError("distortion must satisfy g(0)=0 and g(1)=1")
        grid = np.linspace(0.0, 1.0, DISTORTION_GRID_POINTS)
        values = np.array([g(float(x)) for x in grid])
        if np.any(values < -1e-12) or np.any(values > 1.0 + 1e-12):
            raise LabInputError("distortion must map [0,1] into [0,1]")
        if np.any(np.diff(values) < -1e-12):
            raise LabInputError("distortion must be nondecreasing")

    def __call__(self, mask: int) -> float:
        if mask == 0:
            return 0.0
        if mask == self.base.full_mask:
            return 1.0
        return float(self.distortion(self.base.probability(mask)))


@dataclass(frozen=True)
class SimpleRandomVariable:
    """A real-valued map on the atoms of a finite space."""

    space: FiniteSpace
    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) != self.space.size:
            raise LabInputError("a random variable must assign every atom")
        if any(not math.isfinite(value) for value in self.values):
            raise LabInputError("random variable values must be finite")

    @classmethod
    def from_mapping(
        cls, space: FiniteSpace, assignment: Mapping[Hashable, float]
    ) -> "SimpleRandomVariable":
        missing = [atom for atom in space.atoms if atom not in assignment]
        if missing:
            raise LabInputError(f"atoms without a value: {missing!r}")
        return cls(space=space, values=tuple(float(assignment[atom]) for atom in space.atoms))

    @classmethod
    def from_values(cls, space: FiniteSpace, values: Sequence[float]) -> "SimpleRandomVariable":
        return cls(space=space, values=tuple(float(value) for value in values))

    def level_mask(self, threshold: float) -> int:
        """Mask of {rv >= threshold}."""
        return sum(1 << i for i, value in enumerate(self.values) if value >= threshold)


@dataclass(frozen=True)
class CoreVertexSet:
    """Permutation measures of a 2-monotone capacity (extreme points of its core)."""

    atoms: Tuple[Hashable, ...]
    vertices: Tuple[Tuple[float, ...], ...]

    def __post_init__(self) -> None:
        for vertex in self.vertices:
            if len(vertex) != len(self.atoms):
                raise LabInputError("vertex length must match the atom list")
            if any(weight < -1e-12 for weight in vertex) or abs(math.fsum(vertex) - 1.0) > 1e-12:
                raise LabInputError("every vertex must be a probability weight list")

    def __len__(self) -> int:
        return len(self.vertices)


@lru_cache(maxsize=256)
def _mask_probabilities(space: FiniteSpace) -> np.ndarray:
    table = np.array([space.probability(mask) for mask in range(1 << space.size)])
    table.setflags(write=False)
    return table


def capacity_table(cap: DistortionCapacity) -> np.ndarray:
    """Capacity values indexed by event mask."""
    probabilities = _mask_probabilities(cap.base)
    table = np.array([cap.distortion(float(prob)) for prob in probabilities])
    table[0] = 0.0
    table[-1] = 1.0
    return table


def _vertex_mask_probabilities(space: FiniteSpace, vertex: Sequence[float]) -> np.ndarray:
    masks = np.arange(1 << space.size)
    bits = (masks[:, None] >> np.arange(space.size)[None, :]) & 1
    return bits @ np.asarray(vertex, dtype=float)


def eval_capacity(cap: DistortionCapacity, event: Iterable[Hashable]) -> float:
    """Evaluate V(A) = g(P(A)) for an event given as atom labels."""
    return cap(cap.base.mask_of(event))


def dual_capacity(cap: DistortionCapacity) -> DistortionCapacity:
    """The dual capacity A -> 1 - V(A^c), again a distortion of the same base."""
    if isinstance(cap.distortion, DualDistortion):
        return DistortionCapacity(
            base=cap.base, distortion=cap.distortion.inner, name=cap.name.removeprefix("dual:")
        )
    return DistortionCapacity(
        base=cap.base, distortion=DualDistortion(cap.distortion), name=f"dual:{cap.name}"
    )


def choquet_integral(cap: DistortionCapacity, rv: SimpleRandomVariable) -> float:
    """Choquet integral by the decreasing-rearrangement telescoping sum.

    For values y_1 > ... > y_m this is y_m + sum_k (y_k - y_{k+1}) V(rv >= y_k), which
    equals the positive/negative part integral because V(full space) = 1.
    """
    if rv.space != cap.base:
        raise LabInputError("random variable and capacity live on different spaces")
    levels = sorted(set(rv.values), reverse=True)
    terms = [levels[-1]]
    for upper, lower in zip(levels, levels[1:]):
        terms.append((upper - lower) * cap(rv.level_mask(upper)))
    return math.fsum(terms)


def _check_enumerable(space: FiniteSpace, limit: int) -> None:
    if space.size > limit:
        logger.warning("refusing exhaustive enumeration over %d atoms (limit %d)", space.size, limit)
        raise CapabilityError(f"space has {space.size} atoms; exhaustive limit is {limit}")


def check_n_monotone(cap: DistortionCapacity, n: int, tol: float | None = None) -> bool:
    """Exhaustively check n-monotonicity of the capacity.

    Families with repeated events reduce to smaller orders, so every order 2..n is
    checked over families of distinct events.
    """
    settings = get_settings()
    tol = settings.capacity_tol if tol is None else tol
    space = cap.base
    _check_enumerable(space, settings.max_enum_atoms)
    if not 2 <= n <= max(2, space.size):
        raise LabInputError(f"order n must lie in 2..{max(2, space.size)}")

    table = capacity_table(cap)
    masks = np.arange(1 << space.size)
    for order in range(2, n + 1):
        families = math.comb(len(masks), order - 1)
        if families > settings.max_monotone_families:
            raise CapabilityError(
                f"{families} event families of order {order} exceed the enumeration budget"
            )
        for fixed in itertools.combinations(range(len(masks)), order - 1):
            if _min_monotone_residual(table, masks, fixed) < -tol:
                return False
    return True


def _min_monotone_residual(table: np.ndarray, masks: np.ndarray, fixed: Tuple[int, ...]) -> float:
    """Smallest residual of the inclusion-exclusion inequality over a free last event."""
    full = int(masks[-1])
    union_fixed = 0
    for mask in fixed:
        union_fixed |= mask
    lower_bound = np.zeros(len(masks))
    for size in range(0, len(fixed) + 1):
        for subset in itertools.combinations(fixed, size):
            meet = full
            for mask in subset:
                meet &= mask
            if subset:
                lower_bound += (-1.0) ** (size + 1) * table[meet]
            lower_bound += (-1.0) ** (size + 2) * table[meet & masks]
    residual = table[union_fixed | masks] - lower_bound
    return float(residual.min())


def core_extreme_points(cap: DistortionCapacity) -> CoreVertexSet:
    """Permutation measures of the dual capacity v = 1 - V(complement)."""
    settings = get_settings()
    space = cap.base
    _check_enumerable(space, settings.max_core_atoms)
    lower = dual_capacity(cap)
    if space.size >= 2 and not check_n_monotone(lower, 2):
        raise CapabilityError("the dual capacity is not 2-monotone; its core is not enumerable")

    table = capacity_table(lower)
    seen: dict[Tuple[float, ...], Tuple[float, ...]] = {}
    for order in itertools.permutations(range(space.size)):
        vertex = [0.0] * space.size
        chain = 0
        for atom in order:
            previous = table[chain]
            chain |= 1 << atom
            vertex[atom] = float(table[chain] - previous)
        key = tuple(round(weight, 14) for weight in vertex)
        seen.setdefault(key, tuple(vertex))

    for vertex in seen.values():
        slack = _vertex_mask_probabilities(space, vertex) - table
        if float(slack.min()) < -settings.capacity_tol:
            raise CapabilityError("a permutation measure fails to dominate the dual capacity")
    return CoreVertexSet(atoms=space.atoms, vertices=tuple(seen.values()))


def upper_expectation_core(cap: DistortionCapacity, rv: SimpleRandomVariable) -> float:
    """max over core vertices Q of E_Q[rv]; equals the Choquet integral against V."""
    if rv.space != cap.base:
        raise LabInputError("random variable and capacity live on different spaces")
    core = core_extreme_points(cap)
    return max(
        math.fsum(weight * value for weight, value in zip(vertex, rv.values))
        for vertex in core.vertices
    )
