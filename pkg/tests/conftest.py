from pathlib import Path

import pytest

from mfoffload.config import Config
from mfoffload.models import OneShotScenario, Policy, StationaryScenario, SupportDistribution

SCENARIOS_DIR = Path(__file__).resolve().parent.parent / "scenarios"

# Exact equilibria from the type-2 indifference equations
THREE_TYPE_EQUILIBRIUM = Policy((1.0, 0.65625, 0.0))
THREE_TYPE_STATIONARY_PI2 = 0.5069444444444444


@pytest.fixture
def cfg(tmp_path):
    return Config(
        log_dir=str(tmp_path / "logs"),
        sample_block_size=500,
        trajectory_block_size=10,
        exploit_samples=2000,
        coop_samples=2000,
        sim_trajectories=20,
        sim_grid_points=50,
    )


@pytest.fixture
def scenarios_dir():
    return SCENARIOS_DIR


@pytest.fixture
def three_type():
    dist = SupportDistribution.from_lists(
        [0.2, 0.4, 0.4], [(1, 1, 1, 20), (3, 2, 1, 20), (5, 3, 1, 20)],
    )
    return OneShotScenario(dist, 0.5)


@pytest.fixture
def three_type_stationary():
    dist = SupportDistribution.from_lists(
        [0.2, 0.4, 0.4], [(1, 1, 5, 10), (3, 2, 5, 10), (5, 3, 5, 10)],
    )
    return StationaryScenario(dist, 0.5, 0.225)


@pytest.fixture
def three_type_stationary_equilibrium():
    return Policy((1.0, THREE_TYPE_STATIONARY_PI2, 0.0))


@pytest.fixture
def two_type():
    dist = SupportDistribution.from_lists([0.8, 0.2], [(3, 5, 3, 10), (1.5, 1.5, 5, 25)])
    return OneShotScenario(dist, 3.0)


@pytest.fixture
def two_type_stationary():
    dist = SupportDistribution.from_lists([0.8, 0.2], [(3, 1.5, 5, 12), (1.5, 1, 2, 20)])
    return StationaryScenario(dist, 3.0, 0.6)


@pytest.fixture
def single_type():
    dist = SupportDistribution.from_lists([1.0], [(1, 1, 1, 20)])
    return StationaryScenario(dist, 10.0, 1e-3)
