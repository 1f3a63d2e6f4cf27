import numpy as np
import pytest

from stochmhd.grid import GridSpec
from stochmhd.spectral import random_divfree_field, random_scalar_field


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(32)


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def scalar_pair(grid64, rng):
    return random_scalar_field(grid64, rng), random_scalar_field(grid64, rng)


@pytest.fixture
def divfree_pair(grid64, rng):
    return random_divfree_field(grid64, rng), random_divfree_field(grid64, rng)
