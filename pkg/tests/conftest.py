import math

import numpy as np
import pytest

from nsbesov.spectral import make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid():
    return make_grid(1 / 8, 128)


def gaussian_symbol(sigma: float = 1.0):
    """Transform of ``exp(-|x|^2 sigma^2 / 2)`` up to the factor ``2 pi / sigma^2``."""
    return lambda a, b: np.exp(-(a**2 + b**2) / (2 * sigma**2))


def gaussian_lp(p: float, sigma: float = 1.0) -> float:
    """``||F^-1[exp(-|xi|^2 / (2 sigma^2))]||_p`` in closed form."""
    amp = sigma**2 / (2 * math.pi)
    if math.isinf(p):
        return amp
    return amp * (2 * math.pi / (p * sigma**2)) ** (1 / p)
