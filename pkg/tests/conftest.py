import os

import pytest
from hypothesis import settings

from src.bundles import m2_fan, mermin_peres
from src.context_poset import full_abelian_poset
from src.star_algebra import abelian_algebra, matrix_algebra

settings.register_profile("fast", max_examples=25, deadline=None)
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture(scope="session")
def c2():
    return full_abelian_poset(2)


@pytest.fixture(scope="session")
def c3():
    return full_abelian_poset(3)


@pytest.fixture(scope="session")
def c4():
    return full_abelian_poset(4)


@pytest.fixture(scope="session")
def mermin():
    return mermin_peres()


@pytest.fixture(scope="session")
def fan():
    return m2_fan(3)


@pytest.fixture
def m2():
    return matrix_algebra(2)


@pytest.fixture
def c3_algebra():
    return abelian_algebra(3)


@pytest.fixture
def clean_env(monkeypatch):
    """Drop every SPECPRESHEAF_* variable so settings fall back to defaults."""
    for name in list(os.environ):
        if name.startswith("SPECPRESHEAF_"):
            monkeypatch.delenv(name)
    return monkeypatch
