"""Extended-real support for rate functions.

Rate functions take values in [0, +inf]. Inside the lab the infinite value is the
singleton ``POS_INF``: it compares against floats but refuses arithmetic, so an
infinite rate can never leak silently into a sum. ``to_float`` converts at the report
boundary.
"""

from __future__ import annotations

import math
from functools import total_ordering
from typing import Union


@total_ordering
class _PositiveInfinity:
    _instance: "_PositiveInfinity | None" = None

    def __new__(cls) -> "_PositiveInfinity":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "POS_INF"

    def __str__(self) -> str:
        return "inf"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, _PositiveInfinity):
            return True
        if isinstance(other, (int, float)):
            return math.isinf(other) and other > 0
        return NotImplemented

    def __lt__(self, other: object) -> bool:
        if isinstance(other, (_PositiveInfinity, int, float)):
            return False
        return NotImplemented

    def __gt__(self, other: object) -> bool:
        if isinstance(other, _PositiveInfinity):
            return False
        if isinstance(other, (int, float)):
            return not (math.isinf(other) and other > 0)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(math.inf)

    def __reduce__(self) -> str:
        return "POS_INF"


POS_INF = _PositiveInfinity()

ExtendedReal = Union[float, _PositiveInfinity]


def is_infinite(value: ExtendedReal) -> bool:
    """Return True for the distinguished +inf value (or a float +inf)."""
    return value is POS_INF or (isinstance(value, float) and math.isinf(value) and value > 0)


def to_float(value: ExtendedReal) -> float:
    """Convert an extended real into a plain float for reports."""
    if value is POS_INF:
        return math.inf
    return float(value)


def negate(value: ExtendedReal) -> float:
    """Return -value as a float, mapping +inf to -inf (bounds of the form -inf I)."""
    if value is POS_INF:
        return -math.inf
    return -float(value)


def ext_min(*values: ExtendedReal) -> ExtendedReal:
    """Minimum over extended reals; POS_INF when the collection is empty."""
    best: ExtendedReal = POS_INF
    for value in values:
        if value < best:
            best = value
    return best
