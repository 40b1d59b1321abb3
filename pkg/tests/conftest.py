"""Pytest fixtures. Physical parameters default to the GaAs-like bath used throughout."""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from phonocav.bath import BathParams
from phonocav.system import SystemParams

REPO_ROOT = Path(__file__).resolve().parent.parent
CONFIGS_DIR = REPO_ROOT / "configs"
SRC_DIR = REPO_ROOT / "src"


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def configs_dir() -> Path:
    return CONFIGS_DIR


@pytest.fixture(scope="session")
def bath_4k() -> BathParams:
    """alpha = 0.0251 ps^2, nu_c = 2.23 rad/ps, T = 4 K."""
    return BathParams()


@pytest.fixture(scope="session")
def bath_zero_t() -> BathParams:
    return BathParams(temperature=0.0)


@pytest.fixture(scope="session")
def resonant_system() -> SystemParams:
    """omega_eg = omega_c, g = 2.23 rad/ps, kappa = 0.5 rad/ps, initially excited emitter."""
    return SystemParams()


@pytest.fixture(autouse=True)
def _add_src_to_path() -> None:
    src = str(SRC_DIR)
    if src not in os.environ.get("PYTHONPATH", "").split(os.pathsep):
        os.environ["PYTHONPATH"] = os.pathsep.join([src, os.environ.get("PYTHONPATH", "")])
