import numpy as np
import pytest

from specrd.reaction import Polynomial
from specrd.sde import SimConfig


@pytest.fixture
def cubic():
    return Polynomial([0.0, 0.0, 0.0, -1.0])


@pytest.fixture
def linear_cfg():
    """Reaction-free baseline: exactly Gaussian dynamics."""
    return SimConfig(n=1, kmax=8, gamma=0.0, alpha=0.1, dt=0.01, horizon=0.5, seed=101)


@pytest.fixture
def cubic_cfg(cubic):
    return SimConfig(n=1, kmax=8, gamma=0.0, alpha=0.1, dt=0.01, horizon=0.5,
                     seed=101, poly=cubic)
