import numpy as np
import pytest

from capax import CPOperator, random_cp


def make_op(n: int, m: int, num_kraus: int, seed: int) -> CPOperator:
    """Random operator normalized so determinant coefficients stay O(1)."""
    rng = np.random.default_rng(seed)
    return random_cp(n, m, num_kraus, scale=1.0 / np.sqrt(n * num_kraus), rng=rng)


def random_psd(n: int, rng) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return g @ g.conj().T / n + 0.1 * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)
