import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from relaxlab.models import build_combustion, build_elasticity, build_symmetric

settings.register_profile(
    "relaxlab", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("relaxlab")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def elasticity():
    return build_elasticity()


@pytest.fixture(scope="session")
def combustion():
    return build_combustion()


@pytest.fixture(scope="session")
def symmetric():
    return build_symmetric()


@pytest.fixture(scope="session")
def models(elasticity, combustion, symmetric):
    return {"elasticity": elasticity, "combustion": combustion, "symmetric": symmetric}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
