import numpy as np
import pytest

from fdnoma import default_config


@pytest.fixture
def ideal_cfg():
    """Reference setup, no impairments, moderate loop-interference decay."""
    return default_config(li_quality_mu=0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
