import numpy as np
import pytest

from zenodrive import LipkinModel, TwoLevelModel, build_trajectory

START = np.array([0.0, 0.0])
END = np.array([2.0, 0.5])


@pytest.fixture(scope="session")
def lipkin10():
    return LipkinModel(10)


@pytest.fixture(scope="session")
def two_level():
    return TwoLevelModel()


@pytest.fixture(scope="session")
def trajectories10(lipkin10):
    """Dense driving trajectories of all three families for the N=10 model.

    Dense enough to discretize up to K = 5000 steps (>= 10 input segments per
    output step).
    """
    return {
        family: build_trajectory(
            lipkin10, family, START, END, dense_steps=50000, geodesic_steps=256
        )
        for family in ("geodesic", "linear-v", "linear-u")
    }
