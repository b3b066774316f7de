"""Grid and list parsing shared by the CLI and the HTTP layer."""

from __future__ import annotations

import math
from typing import List, Tuple

import numpy as np

from backend.app.core.errors import LabInputError

GRID_DECIMALS = 12


def parse_grid_spec(spec: str) -> Tuple[float, float, float]:
    """Parse "start:stop:step"."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise LabInputError(f"grid spec must look like start:stop:step, got {spec!r}")
    try:
        start, stop, step = (float(part) for part in parts)
    except ValueError as exc:
        raise LabInputError(f"grid spec {spec!r} is not numeric") from exc
    if step <= 0.0 or start > stop:
        raise LabInputError(f"grid spec {spec!r} needs step > 0 and start <= stop")
    return start, stop, step


def make_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive grid rounded to 12 decimals so lattice values like 0.25 are exact."""
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), GRID_DECIMALS)


def parse_int_list(spec: str) -> List[int]:
    """Parse "100,500,1000"."""
    try:
        values = [int(part) for part in spec.split(",") if part.strip()]
    except ValueError as exc:
        raise LabInputError(f"{spec!r} is not a comma-separated list of integers") from exc
    if not values:
        raise LabInputError("list must not be empty")
    return values


def parse_float_list(spec: str) -> List[float]:
    try:
        values = [float(part) for part in spec.split(",") if part.strip()]
    except ValueError as exc:
        raise LabInputError(f"{spec!r} is not a comma-separated list of numbers") from exc
    if not values:
        raise LabInputError("list must not be empty")
    return values


def parse_intervals(spec: str) -> List[Tuple[float, float]]:
    """Parse "a:b,c:d" into closed interval bounds."""
    intervals = []
    for chunk in spec.split(","):
        bounds = chunk.split(":")
        if len(bounds) != 2:
            raise LabInputError(f"interval {chunk!r} must look like lower:upper")
        try:
            lower, upper = float(bounds[0]), float(bounds[1])
        except ValueError as exc:
            raise LabInputError(f"interval {chunk!r} is not numeric") from exc
        if lower > upper:
            raise LabInputError(f"interval {chunk!r} has lower > upper")
        intervals.append((lower, upper))
    return intervals
