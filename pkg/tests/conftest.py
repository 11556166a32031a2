import os
from fractions import Fraction

import hypothesis
import numpy as np
import pytest
from hypothesis import strategies as st

from carnot.groupoid import CarnotContext
from spec_loader import SpecLoader

np.seterr(all="warn")

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SPEC_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "specs")


def spec_path(name: str) -> str:
    return os.path.join(SPEC_DIR, f"{name}.json")


def rationals(bound: int = 6, denom: int = 5):
    return st.builds(Fraction, st.integers(-bound, bound), st.integers(1, denom))


@pytest.fixture(scope="session")
def loader():
    return SpecLoader()


@pytest.fixture(scope="session")
def heisenberg(loader):
    return loader.load_spec(spec_path("heisenberg"))


@pytest.fixture(scope="session")
def engel(loader):
    return loader.load_spec(spec_path("engel"))


@pytest.fixture(scope="session")
def abelian(loader):
    return loader.load_spec(spec_path("abelian"))


@pytest.fixture(scope="session")
def perturbed(loader):
    return loader.load_spec(spec_path("perturbed_heisenberg"))


@pytest.fixture(scope="session")
def heisenberg_ctx(heisenberg):
    return CarnotContext(heisenberg)


@pytest.fixture(scope="session")
def engel_ctx(engel):
    return CarnotContext(engel)
