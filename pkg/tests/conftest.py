import numpy as np
import pytest

from haar_radial.config import get_settings
from haar_radial.services.matrix_core import BlockUnitary


@pytest.fixture(autouse=True)
def fresh_settings():
    """CLI runs mutate the cached settings; every test starts from the defaults."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def haar_block(rng):
    def make(n: int, m: int) -> BlockUnitary:
        return BlockUnitary.haar(n, m, rng)

    return make


@pytest.fixture
def swap_matrix():
    """g = [[0, 1], [1, 0]] with n = m = 1, whose characteristic function is chi(lam) = lam."""
    return BlockUnitary(np.array([[0.0, 1.0], [1.0, 0.0]]), 1, 1)
