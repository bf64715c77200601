"""
Shared fixtures for the KP Torus Lab tests.
"""

import numpy as np
import pytest

from src.config import ExperimentConfig
from src.fourier_field import GridSpec, SpaceTimeSpectrum


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_grid():
    return GridSpec(K=2, M=2, J=2)


@pytest.fixture
def unit_mode():
    """Factory for a unit coefficient at one (k, eta1, eta2, j) of a grid."""

    def make(grid: GridSpec, k: int, eta1: int, eta2: int, j: int) -> SpaceTimeSpectrum:
        return SpaceTimeSpectrum.from_modes(grid, {(k, eta1, eta2, j): 1.0})

    return make


@pytest.fixture
def make_config(tmp_path):
    """Factory for experiment configurations writing under a temporary directory."""

    def make(command: str, seed: int = 0, threads: int = 1, **parameters) -> ExperimentConfig:
        return ExperimentConfig(
            command=command, parameters=parameters, seed=seed, threads=threads, output=str(tmp_path / "reports")
        )

    return make
