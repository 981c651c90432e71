import numpy as np
import pytest

from qrdr.dataset import load_sonar


@pytest.fixture(scope="session")
def sonar():
    return load_sonar()


@pytest.fixture(scope="session")
def sonar_features(sonar):
    return sonar.features


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: end-to-end acceptance battery")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
