from pathlib import Path

import numpy as np
import pytest

from src.qcis.gaussian_core import StatePrepParams
from src.qcis.validation import benchmark_params

CONFIG_DIR = Path(__file__).resolve().parents[1] / 'configs'


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def benchmark():
    return benchmark_params()


@pytest.fixture
def small_params():
    """Low-energy correlated two-mode preparation, safe at truncation 30."""
    return StatePrepParams(thermal=(0.2, 0.1), squeezing={(0, 0): 0.1, (0, 1): 0.15j},
                           displacement=(0.4 + 0.2j, -0.3j))


@pytest.fixture
def config_dir():
    return CONFIG_DIR
