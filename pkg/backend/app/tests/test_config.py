import pytest
from pydantic import ValidationError


def test_defaults(lab_env):
    settings = lab_env()
    assert settings.default_p == 0.5
    assert settings.default_grid == "0:1:0.001"
    assert settings.tol_true == 0.02
    assert settings.sep_min == 0.15
    assert settings.n_min == 500


def test_env_overrides(lab_env, tmp_path):
    settings = lab_env(
        {
            "LDP_LAB_DEFAULT_P": "0.3",
            "LDP_LAB_N_MIN": "1000",
            "LDP_LAB_LOG_DIR": tmp_path / "custom-logs",
        }
    )
    assert settings.default_p == pytest.approx(0.3)
    assert settings.n_min == 1000
    assert (tmp_path / "custom-logs").is_dir()


def test_clamped_values(lab_env):
    settings = lab_env(
        {
            "LDP_LAB_DEFAULT_P": "1.5",
            "LDP_LAB_N_MIN": "-4",
            "LDP_LAB_SEP_MIN": "-1",
            "LDP_LAB_BRACKET_BOUND": "0.1",
        }
    )
    assert 0.0 < settings.default_p < 1.0
    assert settings.n_min == 1
    assert settings.sep_min == 0.0
    assert settings.bracket_bound == 1.0


def test_non_positive_tolerance_rejected(lab_env):
    with pytest.raises(ValidationError):
        lab_env({"LDP_LAB_TOL_TRUE": "0"})
