import numpy as np
import pytest

MASTER_SEED = 20260810


@pytest.fixture
def rng():
    return np.random.default_rng(MASTER_SEED)


@pytest.fixture
def master_seed():
    return MASTER_SEED
