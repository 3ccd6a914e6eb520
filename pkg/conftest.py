"""
Root conftest: puts the repository root on sys.path and provides shared fixtures.
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from shared.config import SolverSettings  # noqa: E402


@pytest.fixture
def settings() -> SolverSettings:
    return SolverSettings()


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240611)
