from fractions import Fraction

import pytest

import utils
from errors import SpecFormatError
from settings import ENV_THREADS, Tolerances, env_int
from utils import is_exact, to_jsonable, worker_count


def test_worker_count_from_env(monkeypatch):
    monkeypatch.setenv(ENV_THREADS, "3")
    assert worker_count() == 3
    monkeypatch.setenv(ENV_THREADS, "0")
    assert worker_count() == 1
    monkeypatch.setenv(ENV_THREADS, "many")
    assert worker_count() >= 1


def test_env_int_default(monkeypatch):
    monkeypatch.delenv("CARNOT_LAB_TEST_INT", raising=False)
    assert env_int("CARNOT_LAB_TEST_INT", 7) == 7
    monkeypatch.setenv("CARNOT_LAB_TEST_INT", " 12 ")
    assert env_int("CARNOT_LAB_TEST_INT", 7) == 12


def test_tolerances_merge():
    tol = Tolerances.from_mapping({"newton": "1e-10", "flow_steps": 256})
    assert tol.newton == 1e-10 and tol.flow_steps == 256
    assert tol.rank == Tolerances().rank
    assert Tolerances.from_mapping(None) == Tolerances()


@pytest.mark.parametrize("data", [{"flow_steps": 0}, {"rank": "abc"}, {"speed": 1}])
def test_tolerances_rejects(data):
    with pytest.raises(SpecFormatError):
        Tolerances.from_mapping(data)


def test_exact_and_jsonable_helpers():
    assert is_exact((1, Fraction(1, 2)))
    assert not is_exact((1, 0.5))
    assert to_jsonable((Fraction(3, 4), Fraction(2), 0.5, float("inf"))) == ["3/4", 2, 0.5, "inf"]
    assert not hasattr(utils, "to_float_list")
