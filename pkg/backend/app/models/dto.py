from __future__ import annotations

import math
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, computed_field, field_validator, model_validator


class DependenceResidual(BaseModel):
    """Both sides of the negative-dependence inequality."""
    lhs: float
    rhs: float

    @computed_field  # type: ignore[misc]
    def residual(self) -> float:
        """Product-of-expectations side minus joint side."""
        return self.lhs - self.rhs


class ExposedPointVerdict(BaseModel):
    """Exposed-point classification with its evidence."""
    point: float
    is_exposed: bool = Field(..., serialization_alias="exposed")
    hyperplane: Optional[float] = None
    margin: Optional[float] = None
    witness: str = ""
    side_conditions: Optional[Dict[str, bool]] = None


class LdpRow(BaseModel):
    """One finite-n row of a counterexample report."""
    n: int = Field(..., ge=1)
    q_log: float
    rate: float
    empty: bool = False


class LdpReport(BaseModel):
    """Finite-n capacity rates against the true and the refuted limits."""
    p: float = Field(..., gt=0.0, lt=1.0)
    a: float
    b: float
    rows: List[LdpRow]
    target_true: float
    target_refuted: float
    tol_true: float = Field(..., gt=0.0)
    sep_min: float = Field(..., ge=0.0)
    n_min: int = Field(..., ge=1)
    decisive_n: Optional[int] = None
    true_gap: Optional[float] = None
    refuted_gap: Optional[float] = None
    verdict: Literal["pass", "fail"]

    @field_validator("rows")
    @classmethod
    def sorted_rows(cls, rows: List[LdpRow]) -> List[LdpRow]:
        """Rows are always reported in increasing n."""
        return sorted(rows, key=lambda row: row.n)


class IntervalModel(BaseModel):
    """Wire form of an interval event."""
    lower: float
    upper: float
    lower_open: bool = False
    upper_open: bool = False

    @model_validator(mode="after")
    def ordered(self) -> "IntervalModel":
        if self.lower > self.upper:
            raise ValueError("lower must not exceed upper")
        return self


class BoundReport(BaseModel):
    """Finite-n large-deviation bound for a union of intervals."""
    kind: Literal["upper", "lower"]
    p: float
    n: int = Field(..., ge=1)
    intervals: List[IntervalModel]
    rate: float
    cramer_bound: float
    slack: float
    corrected_bound: float
    margin: float

    @computed_field  # type: ignore[misc]
    def holds(self) -> bool:
        """True when the finite-n inequality holds (margin is never negative)."""
        return self.margin >= 0.0


class ChernoffRow(BaseModel):
    """Chernoff chain (1/n) ln V(mean > c) <= gamma_n(lam) - lam c <= Lambda(lam) - lam c."""
    n: int = Field(..., ge=1)
    lam: float = Field(..., gt=0.0)
    lhs: float
    markov_bound: float
    chernoff_bound: float
    envelope: float

    @computed_field  # type: ignore[misc]
    def margin(self) -> float:
        """Chernoff bound minus the exact rate; +inf when the event is empty."""
        if self.lhs == -math.inf:
            return math.inf
        return self.chernoff_bound - self.lhs

    @computed_field  # type: ignore[misc]
    def holds(self) -> bool:
        """Both links of the chain hold exactly."""
        return self.lhs <= self.markov_bound <= self.chernoff_bound


class ChernoffReport(BaseModel):
    """All Chernoff rows for one threshold c."""
    p: float
    c: float
    rows: List[ChernoffRow]

    @computed_field  # type: ignore[misc]
    def all_hold(self) -> bool:
        return all(row.holds for row in self.rows)


class Figure1Row(BaseModel):
    """Both rate functions at one grid point."""
    x: float
    I_p: float
    I: float


class CheckResult(BaseModel):
    """Outcome of one invariant in the verification suite."""
    name: str
    passed: bool
    margin: float
    detail: str = ""


class VerifySummary(BaseModel):
    """Verification suite outcome."""
    seed: int
    checks: List[CheckResult]

    @computed_field  # type: ignore[misc]
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


class CounterexampleRequest(BaseModel):
    """Body of POST /counterexample."""
    p: float = Field(default=0.5, gt=0.0, lt=1.0)
    a: float = 0.05
    b: float = 0.2
    n_list: List[int] = Field(default_factory=lambda: [500, 1000, 5000], min_length=1)
    tol_true: Optional[float] = Field(default=None, gt=0.0)
    sep_min: Optional[float] = Field(default=None, ge=0.0)
    n_min: Optional[int] = Field(default=None, ge=1)


class RunConfig(BaseModel):
    """Parsed command-line invocation, validated before dispatch."""
    subcommand: str
    p: float = Field(default=0.5, gt=0.0, lt=1.0)
    grid: Optional[Tuple[float, float, float]] = None
    n_list: List[int] = Field(default_factory=list)
    output_format: Literal["csv", "json"] = "csv"
    out: Optional[str] = None
    options: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("grid")
    @classmethod
    def valid_grid(cls, grid: Optional[Tuple[float, float, float]]) -> Optional[Tuple[float, float, float]]:
        """Grids need a positive step and start <= stop."""
        if grid is None:
            return None
        start, stop, step = grid
        if step <= 0.0:
            raise ValueError("grid step must be positive")
        if start > stop:
            raise ValueError("grid start must not exceed stop")
        return grid

    @field_validator("n_list")
    @classmethod
    def positive_sizes(cls, n_list: List[int]) -> List[int]:
        """Sample sizes must be positive."""
        if any(n < 1 for n in n_list):
            raise ValueError("every n must be positive")
        return n_list


def _encode(value: Any) -> Any:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, dict):
        return {key: _encode(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(item) for item in value]
    return value


def to_jsonable(model: BaseModel | List[BaseModel]) -> Any:
    """Dump report models to plain JSON types, with infinities as "inf"/"-inf" strings."""
    if isinstance(model, list):
        return [_encode(item.model_dump(by_alias=True)) for item in model]
    return _encode(model.model_dump(by_alias=True))


def rows_to_jsonable(header: List[str], rows: List[List[Any]]) -> List[Dict[str, Any]]:
    """Header/row tables as JSON objects, infinities as strings."""
    return [_encode(dict(zip(header, row))) for row in rows]
