import numpy as np
import pytest
from scipy.stats import unitary_group

from tritter.circuit import CircuitUnitary, ideal_tritter


@pytest.fixture
def tritter():
    return ideal_tritter()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def haar(m, rng):
    if m == 1:
        return CircuitUnitary(np.exp(1j * rng.uniform(0, 2 * np.pi)) * np.eye(1))
    return CircuitUnitary(unitary_group.rvs(m, random_state=rng))


def random_phases(m, rng):
    return np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, m)))
