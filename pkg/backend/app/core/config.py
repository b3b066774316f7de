from functools import lru_cache
from pathlib import Path

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

DEFAULT_GRID = "0:1:0.001"
DEFAULT_N_LIST = "100,500,1000,5000"
PROJECT_ROOT = Path(__file__).resolve().parents[3]


class LabSettings(BaseSettings):
    """Laboratory configuration derived from LDP_LAB_* environment variables."""

    app_name: str = "Sublinear LDP Lab"
    log_dir: Path = Path("logs")

    # Canonical instance
    default_p: float = 0.5
    default_grid: str = DEFAULT_GRID
    default_n_list: str = DEFAULT_N_LIST

    # Counterexample verdict
    tol_true: float = 0.02
    sep_min: float = 0.15
    n_min: int = 500

    # Capacity / coupling guards
    capacity_tol: float = 1e-12
    max_enum_atoms: int = 12
    max_core_atoms: int = 8
    max_monotone_families: int = 250_000
    max_product_outcomes: int = 10_000_000

    # Conjugate search
    conjugate_tol: float = 1e-10
    bracket_bound: float = 700.0
    exposed_margin: float = 1e-12

    # Output
    verify_seed: int = 42
    csv_digits: int = 12

    model_config = SettingsConfigDict(
        env_prefix="LDP_LAB_",
        env_file=PROJECT_ROOT / ".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    @field_validator("default_p")
    @classmethod
    def open_unit_interval(cls, value: float) -> float:
        """Keep the default Bernoulli parameter strictly inside (0, 1)."""
        return min(max(float(value), 1e-6), 1.0 - 1e-6)

    @field_validator("n_min", "max_enum_atoms", "max_core_atoms", "csv_digits")
    @classmethod
    def positive_int(cls, value: int) -> int:
        """Clamp integer configuration values to be strictly positive."""
        return max(1, int(value))

    @field_validator("max_monotone_families", "max_product_outcomes")
    @classmethod
    def positive_budget(cls, value: int) -> int:
        """Enumeration budgets below one would refuse every request."""
        return max(1, int(value))

    @field_validator("tol_true", "capacity_tol", "conjugate_tol", "exposed_margin")
    @classmethod
    def positive_tolerance(cls, value: float) -> float:
        """Tolerances must stay strictly positive."""
        value = float(value)
        if value <= 0.0:
            raise ValueError("tolerances must be positive")
        return value

    @field_validator("sep_min")
    @classmethod
    def non_negative(cls, value: float) -> float:
        """Separation thresholds cannot be negative."""
        return max(0.0, float(value))

    @field_validator("bracket_bound")
    @classmethod
    def bracket_floor(cls, value: float) -> float:
        """The bracket must at least cover the initial [-1, 1] window."""
        return max(1.0, float(value))


@lru_cache
def get_settings() -> LabSettings:
    """Return cached settings (re-computed only when module reloaded)."""
    settings = LabSettings()
    settings.log_dir.mkdir(parents=True, exist_ok=True)
    return settings


def reload_settings() -> None:
    """Clear cached settings – primarily for tests."""
    get_settings.cache_clear()  # type: ignore[attr-defined]
