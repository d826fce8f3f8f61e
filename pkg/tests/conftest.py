import numpy as np
import pytest

from drivebench.perturb import default_catalog


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def frame240():
    """Fixed 240x320 RGB test frame."""
    rng = np.random.default_rng(1234)
    return rng.integers(0, 256, size=(240, 320, 3), dtype=np.uint8)


@pytest.fixture(scope="session")
def small_frame():
    rng = np.random.default_rng(99)
    return rng.integers(0, 256, size=(48, 64, 3), dtype=np.uint8)
