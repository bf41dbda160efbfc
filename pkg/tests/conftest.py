import numpy as np
import pytest

from dimsc.linalg import row_normalize, truncated_svd
from dimsc.model import population_matrix, random_valid_params

SEED_INSTANCE = 20240101


@pytest.fixture(scope="session")
def seed_params():
    """The fixed reference instance used by the oracle tests (K=3)."""
    return random_valid_params(SEED_INSTANCE, K=3)


@pytest.fixture(scope="session")
def seed_omega(seed_params):
    return population_matrix(seed_params)


@pytest.fixture(scope="session")
def seed_svd(seed_omega):
    return truncated_svd(seed_omega, 3)


@pytest.fixture(scope="session")
def seed_ustar(seed_svd):
    return row_normalize(seed_svd.U)[0]


def is_permutation_matrix(M, tol=1e-12):
    M = np.asarray(M)
    return (M.shape[0] == M.shape[1]
            and np.all((np.abs(M) < tol) | (np.abs(M - 1) < tol))
            and np.allclose(M.sum(0), 1) and np.allclose(M.sum(1), 1))
