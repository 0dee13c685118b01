import numpy as np
import pytest

from overlap.cache import clear_channel_cache
from overlap.config import settings


@pytest.fixture(autouse=True)
def fresh_channel_cache():
    clear_channel_cache()
    yield
    clear_channel_cache()


@pytest.fixture(autouse=True)
def quiet_progress(monkeypatch):
    monkeypatch.setattr(settings, "progress", False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def random_qubit_state(rng):
    """Factory for random full-rank qubit density matrices."""
    def make():
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = a @ a.conj().T
        return rho / np.trace(rho)
    return make
