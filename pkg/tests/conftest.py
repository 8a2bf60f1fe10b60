from __future__ import annotations

from pathlib import Path

import pytest

from dampwave.grid import DampingProfile, build_grid

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


@pytest.fixture
def linear_damping():
    return DampingProfile(alpha=1.0, a0=1.0)


@pytest.fixture(scope="session")
def short_grid():
    return build_grid(1.0, 21.0, 801, 2)


@pytest.fixture
def configs_dir():
    return CONFIGS
