import math

import pytest

from carnot.convergence import EXACT, FAIL, PASS, estimate_order, is_passing, order_table, verdict
from settings import DYADIC_U_GRID, Tolerances


def test_first_order_errors_pass():
    errs = [0.3 * u for u in DYADIC_U_GRID]
    assert estimate_order(DYADIC_U_GRID, errs) == pytest.approx(1.0)
    assert verdict(DYADIC_U_GRID, errs) == PASS


def test_second_order_slope():
    errs = [2.0 * u * u for u in DYADIC_U_GRID]
    assert estimate_order(DYADIC_U_GRID, errs) == pytest.approx(2.0)


def test_tiny_errors_are_exact():
    assert verdict(DYADIC_U_GRID, [1e-9] * len(DYADIC_U_GRID)) == EXACT
    assert estimate_order(DYADIC_U_GRID, [0.0] * len(DYADIC_U_GRID)) == math.inf


def test_stagnating_errors_fail():
    assert verdict(DYADIC_U_GRID, [0.5] * len(DYADIC_U_GRID)) == FAIL
    # 斜率夠但最終誤差太大
    errs = [100.0 * u for u in DYADIC_U_GRID]
    assert verdict(DYADIC_U_GRID, errs) == FAIL
    assert verdict(DYADIC_U_GRID, errs, Tolerances(final_error_max=1.0)) == PASS


def test_order_table_columns():
    table = order_table([0.5, 0.25, 0.125], [0.4, 0.2, 0.1], "t")
    assert list(table.columns) == ["t", "err", "est_order"]
    assert math.isnan(table["est_order"].iloc[0])
    assert table["est_order"].iloc[1:].tolist() == pytest.approx([1.0, 1.0])


def test_is_passing():
    assert is_passing(EXACT) and is_passing(PASS) and not is_passing(FAIL)
