import json
from fractions import Fraction

import numpy as np
import pytest

from carnot.filtration import (adapted_frame, check_filtration, dilation, exp_chart, exp_chart_inverse,
                               frame_rank, levi_constants, span_residual)
from carnot.groupoid import CarnotContext
from carnot.nilpotent import GradedLieAlgebra, bch, bracket, dilation_automorphism
from conftest import spec_path
from errors import LeviBracketError, NewtonConvergenceError, RankDeficiencyError, ZeroScaleError

F = Fraction


def test_heisenberg_validates(heisenberg):
    report = check_filtration(heisenberg)
    assert report.ok
    assert report.points_checked == 3
    assert report.ranks[0] == {1: 2, 2: 3}
    assert report.max_residual == 0


def test_extra_points_are_checked(heisenberg):
    report = check_filtration(heisenberg, extra_points=4, seed=7)
    assert report.points_checked == 7
    assert report.ok


def test_broken_spec_is_rank_fatal(loader):
    spec = loader.load_spec(spec_path("broken"))
    report = check_filtration(spec)
    assert not report.ok
    assert report.fatal
    with pytest.raises(RankDeficiencyError):
        report.require_valid()


def test_bracket_violation_detected(loader):
    # 權重直接跳到 3：[∂x, ∂y + x∂z] = ∂z 必須落在 H¹，但不在
    data = {
        "dim": 3, "coords": ["x", "y", "z"],
        "layers": [
            {"weight": 1, "fields": [["1", "0", "0"], ["0", "1", "x"]]},
            {"weight": 3, "fields": [["0", "0", "1"]]},
        ],
        "samples": [["0", "0", "0"]],
    }
    report = check_filtration(loader.parse_spec(data))
    assert not report.fatal
    assert [v.pair for v in report.violations] == [("L1.1", "L1.2")]
    with pytest.raises(LeviBracketError):
        report.require_valid()


def test_adapted_frame_greedy_selection(heisenberg):
    frame = adapted_frame(heisenberg, [0, 0, 0])
    assert frame.labels == ("L1.1", "L1.2", "L2.1")
    assert frame.weights == (1, 1, 2)
    assert frame.degree_dims == (2, 1)


def test_heisenberg_levi_constants(heisenberg):
    for p in heisenberg.samples:
        alg = levi_constants(heisenberg, p)
        assert alg.dims == (2, 1)
        assert alg.structure == (((0, 1, 2), F(1)),)


def test_engel_levi_constants(engel):
    alg = levi_constants(engel, [0, 0, 0, 0])
    assert alg.dims == (2, 1, 1)
    assert alg.constant(0, 1, 2) == 1
    assert alg.constant(0, 2, 3) == 1
    assert alg.constant(1, 2, 3) == 0
    assert len(alg.structure) == 2


def test_involutive_levi_constants_empty(loader):
    spec = loader.load_spec(spec_path("involutive"))
    assert levi_constants(spec, spec.samples[1]).is_abelian()


BUNDLED_CONSTANTS = [
    ("heisenberg", 0, {(0, 1, 2): 1}),
    ("heisenberg", 1, {(0, 1, 2): 1}),
    ("heisenberg", 2, {(0, 1, 2): 1}),
    ("engel", 0, {(0, 1, 2): 1, (0, 2, 3): 1}),
    ("engel", 1, {(0, 1, 2): 1, (0, 2, 3): 1}),
    ("perturbed_heisenberg", 0, {(0, 1, 2): 1}),
    ("perturbed_heisenberg", 1, {(0, 1, 2): F(33, 32)}),
    ("abelian", 0, {}),
    ("abelian", 1, {}),
    ("involutive", 0, {}),
    ("involutive", 1, {}),
]


@pytest.mark.parametrize("name,index,expected", BUNDLED_CONSTANTS,
                         ids=[f"{n}-{i}" for n, i, _ in BUNDLED_CONSTANTS])
def test_levi_constants_at_every_bundled_sample(loader, name, index, expected):
    spec = loader.load_spec(spec_path(name))
    assert len(spec.samples) > index
    frame = adapted_frame(spec, spec.samples[index])
    alg = levi_constants(spec, spec.samples[index], frame=frame)
    assert isinstance(alg, GradedLieAlgebra)
    assert dict(alg.structure) == expected
    assert alg.jacobi_residual() == 0
    # 分級：c_ij^m ≠ 0 只在 w_m = w_i + w_j
    for (i, j, m), _ in alg.structure:
        assert frame.weights[m] == frame.weights[i] + frame.weights[j]
    for i in range(alg.size):
        for j in range(alg.size):
            ei, ej = alg.basis(i), alg.basis(j)
            assert bracket(alg, ei, ej) == tuple(-c for c in bracket(alg, ej, ei))


def test_frame_rank_exact_and_float():
    assert frame_rank([(1, 0, 0), (0, 1, 0), (1, 1, 0)]) == 2
    assert frame_rank([(1.0, 0.0), (0.0, 1e-3)]) == 2
    assert span_residual([(1, 0, 0)], (F(2), 0, 0)) == 0


def test_dilation_weights():
    u = F(1, 3)
    assert dilation((1, 1, 2), u, (1, 1, 1)) == (u, u, u ** 2)
    with pytest.raises(ZeroScaleError):
        dilation((1, 1, 2), 0, (1, 1, 1))


def test_exp_chart_inverse_round_trip(heisenberg):
    frame = adapted_frame(heisenberg, heisenberg.samples[1])
    rng = np.random.default_rng(3)
    for _ in range(5):
        xi = rng.uniform(-0.1, 0.1, 3)
        p = exp_chart(frame, list(xi))
        back = exp_chart_inverse(frame, p)
        assert np.allclose(back, xi, atol=1e-10)


def test_exp_chart_inverse_follows_spec_tolerances(loader):
    with open(spec_path("perturbed_heisenberg"), encoding="utf-8") as f:
        data = json.load(f)
    data["tolerances"] = {"newton": 1e-300, "newton_max_iter": 1}
    spec = loader.parse_spec(data)
    frame = CarnotContext(spec).frame(spec.samples[1])
    assert frame.tolerances == spec.tolerances
    assert frame.rebased((0, 0, 0)).tolerances == spec.tolerances

    xi = (0.3, -0.2, 0.1)
    p = exp_chart(frame, list(xi))
    with pytest.raises(NewtonConvergenceError):
        exp_chart_inverse(frame, p)
    # 明確指定的參數優先於 spec
    back = exp_chart_inverse(frame, p, tol=1e-12, max_iter=50)
    assert np.allclose(back, xi, atol=1e-9)


def test_exp_chart_matches_group_law_at_origin(heisenberg):
    # 左不變框架：φ_0(ξ) = exp(ξ)，且 φ_0(δ_u ξ) = δ_u φ_0(ξ)
    ctx = CarnotContext(heisenberg)
    frame = ctx.frame([0, 0, 0])
    alg = ctx.algebra([0, 0, 0])
    xi = (0.3, -0.2, 0.5)
    u = 0.25
    lhs = exp_chart(frame, list(dilation(frame.weights, u, xi))).as_array()
    rhs = np.array(dilation_automorphism(alg, u, exp_chart(frame, list(xi)).coords).coords, dtype=float)
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_exp_chart_is_group_translation(heisenberg):
    ctx = CarnotContext(heisenberg)
    a = (0.5, -1.0, 3.0)
    frame = ctx.frame([0, 0, 0]).rebased(a)
    alg = ctx.algebra([0, 0, 0])
    xi = (0.2, 0.1, -0.3)
    expected = bch(alg, a, xi)
    assert np.allclose(exp_chart(frame, list(xi)).as_array(), expected, atol=1e-12)
