import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from poolselect.model.dataset import Coefficients
from poolselect.study.dgp import DgpConfig, default_theta, simulate_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_pooled():
    """n=240 pooled in pairs with the standard coefficients."""
    cfg = DgpConfig(n=240, p=5, theta_true=Coefficients(-3.0, [1.5, 1.0, 0.0, 0.0, 0.0]), pool_size=2, seed=7)
    return simulate_dataset(cfg).dataset


@pytest.fixture
def small_individual():
    cfg = DgpConfig(n=300, p=4, theta_true=Coefficients(-1.0, [1.0, -0.8, 0.0, 0.0]), pool_size=1,
                    se=0.95, sp=0.97, seed=11)
    return simulate_dataset(cfg).dataset


@pytest.fixture
def standard_pooled():
    """The reference design at a size that fits quickly."""
    cfg = DgpConfig(n=500, p=10, theta_true=default_theta(10), pool_size=2, seed=2024)
    return simulate_dataset(cfg)

