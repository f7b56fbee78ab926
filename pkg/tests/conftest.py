import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "slam",
    deadline=None,
    max_examples=100,
    derandomize=True,
    suppress_health_check=[HealthCheck.filter_too_much, HealthCheck.too_slow],
)
settings.load_profile("slam")


@pytest.fixture(scope="session")
def streams():
    from helpers import load
    return load("streams")


@pytest.fixture(scope="session")
def sp():
    from helpers import load
    return load("sp")


@pytest.fixture(scope="session")
def trees():
    from helpers import load
    return load("trees")
