import numpy as np
import pytest

from tandemlift.config import default_scenario


@pytest.fixture(scope="session")
def scenario():
    """Default parameter set, no scripted inputs."""
    return default_scenario()


@pytest.fixture(scope="session")
def params(scenario):
    return scenario.params


@pytest.fixture(scope="session")
def gains(scenario):
    return scenario.gains


@pytest.fixture(scope="session")
def quad(scenario):
    return scenario.quad


@pytest.fixture(scope="session")
def payload(scenario):
    return scenario.payload


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
