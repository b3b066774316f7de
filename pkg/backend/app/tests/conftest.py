"""Test helpers and fixtures for settings overrides and FastAPI client setup."""

from __future__ import annotations

import importlib
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any, Dict

import pytest
from fastapi.testclient import TestClient

REPO_ROOT = Path(__file__).resolve().parents[3]
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

from backend.app.core import config as config_module


def _apply_env(monkeypatch, env: Dict[str, Any] | None) -> None:
    for key, value in dict(env or {}).items():
        if value is None:
            monkeypatch.delenv(key, raising=False)
        else:
            monkeypatch.setenv(key, str(value))
    # ensure settings pick up the latest environment
    config_module.reload_settings()


@pytest.fixture
def lab_env(monkeypatch) -> Callable[[Dict[str, Any]], config_module.LabSettings]:
    """Return a factory that applies LDP_LAB_* overrides and returns fresh settings."""

    def factory(env: Dict[str, Any] | None = None) -> config_module.LabSettings:
        _apply_env(monkeypatch, env)
        return config_module.get_settings()

    yield factory
    monkeypatch.undo()
    config_module.reload_settings()


@pytest.fixture
def make_client(monkeypatch, tmp_path) -> Callable[[Dict[str, Any]], TestClient]:
    """Return a factory that builds a TestClient with env overrides."""

    def factory(env: Dict[str, Any] | None = None) -> TestClient:
        overrides = {"LDP_LAB_LOG_DIR": tmp_path / "logs", **dict(env or {})}
        _apply_env(monkeypatch, overrides)

        import backend.app.main as main

        importlib.reload(main)
        return TestClient(main.app)

    yield factory
    monkeypatch.undo()
    config_module.reload_settings()
