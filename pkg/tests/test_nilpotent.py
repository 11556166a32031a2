import random
from fractions import Fraction
from functools import partial

import pytest
import sympy
from hypothesis import given, strategies as st

from carnot.nilpotent import (DegreeScaling, GradedLieAlgebra, bch, bracket, check_action_multiplicative,
                              dilation_automorphism, dynkin_coefficients, group_inv, group_mul, identity,
                              lambda_corrected, lambda_displayed, law_k1, law_k2, scaled_algebra,
                              scaling_from_parameters, section_cocycle)
from conftest import rationals
from errors import AlgebraMismatchError, DimensionMismatchError, StepLimitError, ZeroScaleError

F = Fraction

HEISENBERG = GradedLieAlgebra.from_constants((2, 1), {(0, 1, 2): 1})
ENGEL = GradedLieAlgebra.from_constants((2, 1, 1), {(0, 1, 2): 1, (0, 2, 3): 1})
FREE_2_3 = GradedLieAlgebra.from_constants((3, 3), {(0, 1, 3): 1, (0, 2, 4): 1, (1, 2, 5): 1})

vec3 = st.tuples(rationals(), rationals(), rationals())
vec4 = st.tuples(rationals(), rationals(), rationals(), rationals())
vec6 = st.tuples(*[rationals(4, 3)] * 6)


def unipotent_log_product(X, Y):
    """Heisenberg ≅ 3×3 嚴格上三角：e₁ = E₁₂、e₂ = E₂₃、e₃ = E₁₃"""
    def mat(v):
        return sympy.Matrix([[0, v[0], v[2]], [0, 0, v[1]], [0, 0, 0]])

    def exp(N):
        return sympy.eye(3) + N + N * N / 2

    N = exp(mat(X)) * exp(mat(Y)) - sympy.eye(3)
    L = N - N * N / 2
    return tuple(F(int(c.p), int(c.q)) for c in (L[0, 1], L[1, 2], L[0, 2]))


def test_dynkin_degree_two():
    assert dict(dynkin_coefficients(2)) == {(0, 1): F(1, 4), (1, 0): F(-1, 4)}


def test_heisenberg_bch_oracle():
    e1, e2 = HEISENBERG.basis(0), HEISENBERG.basis(1)
    assert bch(HEISENBERG, e1, e2) == (1, 1, F(1, 2))
    assert unipotent_log_product(e1, e2) == (1, 1, F(1, 2))


@given(vec3, vec3)
def test_heisenberg_bch_matches_matrix_logarithm(X, Y):
    assert bch(HEISENBERG, X, Y) == unipotent_log_product(X, Y)


def test_engel_bch_basis_product():
    e1, e2 = ENGEL.basis(0), ENGEL.basis(1)
    assert bch(ENGEL, e1, e2) == (1, 1, F(1, 2), F(1, 12))


def test_engel_bracket_table():
    assert bracket(ENGEL, ENGEL.basis(0), ENGEL.basis(1)) == ENGEL.basis(2)
    assert bracket(ENGEL, ENGEL.basis(1), ENGEL.basis(2)) == ENGEL.zero()
    assert ENGEL.jacobi_residual() == 0


def test_engel_associativity_on_basis():
    e1, e2, e3 = ENGEL.basis(0), ENGEL.basis(1), ENGEL.basis(2)
    assert bch(ENGEL, bch(ENGEL, e1, e2), e3) == bch(ENGEL, e1, bch(ENGEL, e2, e3))


@pytest.mark.parametrize("alg,strategy", [(HEISENBERG, vec3), (ENGEL, vec4), (FREE_2_3, vec6)],
                         ids=["heisenberg", "engel", "free"])
def test_associativity(alg, strategy):
    @given(strategy, strategy, strategy)
    def check(X, Y, Z):
        assert bch(alg, bch(alg, X, Y), Z) == bch(alg, X, bch(alg, Y, Z))

    check()


@given(vec4)
def test_inverse_and_identity(X):
    g = group_mul(ENGEL, X, group_inv(ENGEL, X))
    assert g == identity(ENGEL)
    assert group_mul(ENGEL, identity(ENGEL), X).coords == tuple(X)


@given(vec4, vec4, rationals(3, 3).filter(bool))
def test_dilation_is_automorphism(X, Y, s):
    lhs = dilation_automorphism(ENGEL, s, bch(ENGEL, X, Y)).coords
    rhs = bch(ENGEL, dilation_automorphism(ENGEL, s, X).coords, dilation_automorphism(ENGEL, s, Y).coords)
    assert lhs == rhs


def test_heisenberg_dilation_example():
    s = F(3)
    product = bch(HEISENBERG, HEISENBERG.basis(0), HEISENBERG.basis(1))
    assert dilation_automorphism(HEISENBERG, s, product).coords == (s, s, s * s / 2)
    with pytest.raises(ZeroScaleError):
        dilation_automorphism(HEISENBERG, 0, product)


def test_grading_is_enforced():
    with pytest.raises(AlgebraMismatchError):
        GradedLieAlgebra((2, 1), (((0, 1, 1), F(1)),))
    with pytest.raises(DimensionMismatchError):
        bch(HEISENBERG, (1, 0), (0, 1, 0))


def test_step_cap():
    with pytest.raises(StepLimitError):
        bch(GradedLieAlgebra.abelian((1,) * 7), (0,) * 7, (0,) * 7)


def test_scaling_from_parameters():
    assert scaling_from_parameters((F(2), F(3)), 4).taus == (2, 6, 6)
    assert scaling_from_parameters((), 3).taus == (1, 1)


def test_scaled_algebra_heisenberg_t():
    t = F(1, 5)
    scaled = scaled_algebra(HEISENBERG, DegreeScaling((t,)))
    assert bch(scaled, HEISENBERG.basis(0), HEISENBERG.basis(1)) == (1, 1, t / 2)
    assert scaled_algebra(HEISENBERG, DegreeScaling((0,))).is_abelian()
    with pytest.raises(DimensionMismatchError):
        scaled_algebra(HEISENBERG, DegreeScaling((t, t)))


def test_law_k1_basis_example():
    levi = HEISENBERG.levi_table(1, 1)
    t = F(7, 3)
    assert law_k1((1, 0), (0,), (0, 1), (0,), t, levi) == ((1, 1), (t / 2,))


def test_law_k1_equals_scaled_bch():
    rng = random.Random(0)

    def rat():
        return F(rng.randint(-9, 9), rng.randint(1, 6))

    levi = HEISENBERG.levi_table(1, 1)
    for _ in range(100):
        X, Y, t = tuple(rat() for _ in range(3)), tuple(rat() for _ in range(3)), rat()
        scaled = scaled_algebra(HEISENBERG, DegreeScaling((t,)))
        h, n = law_k1(X[:2], X[2:], Y[:2], Y[2:], t, levi)
        assert h + n == bch(scaled, X, Y)


def test_law_k2_engel_basis_product():
    t, u = F(3, 2), F(-2, 7)
    out = law_k2([(1, 0), (0,), (0,)], [(0, 1), (0,), (0,)], t, u, ENGEL)
    assert out == ((1, 1), (t / 2,), (t * t * u / 12,))
    with pytest.raises(AlgebraMismatchError):
        law_k2([(1, 0), (0,)], [(0, 1), (0,)], t, u, HEISENBERG)


@given(vec4, vec4, rationals(), rationals())
def test_law_k2_equals_scaled_bch(X, Y, t, u):
    scaled = scaled_algebra(ENGEL, scaling_from_parameters((t, u), 3))
    blocks = [ENGEL.block(k) for k in (1, 2, 3)]
    out = law_k2([X[b] for b in blocks], [Y[b] for b in blocks], t, u, ENGEL)
    assert out[0] + out[1] + out[2] == bch(scaled, X, Y)


@given(st.tuples(rationals(), rationals()), st.tuples(rationals(), rationals()), rationals())
def test_section_cocycle_is_half_t_levi(h1, h2, t):
    levi = HEISENBERG.levi_table(1, 1)
    expected = t / 2 * (h1[0] * h2[1] - h1[1] * h2[0])
    assert section_cocycle(levi, h1, h2, t) == (expected,)


def _samples():
    return [((F(1), F(-2)), (F(1, 3),), (F(2), F(1, 2)), (F(-1),), F(3)),
            ((F(0), F(1)), (F(0),), (F(1), F(0)), (F(0),), F(1, 2))]


def test_displayed_lambda0_fails_at_s_two():
    levi = HEISENBERG.levi_table(1, 1)
    result = check_action_multiplicative(partial(lambda_displayed, "lambda0"), levi, F(2), _samples())
    assert not result["ok"]
    assert result["failures"] == 2


@pytest.mark.parametrize("action", ["lambda0", "lambda1"])
def test_corrected_actions_multiplicative(action):
    levi = HEISENBERG.levi_table(1, 1)
    for s in (F(2), F(-1, 3), F(5)):
        assert check_action_multiplicative(partial(lambda_corrected, action), levi, s, _samples())["ok"]


@pytest.mark.parametrize("form", [lambda_displayed, lambda_corrected])
@pytest.mark.parametrize("action", ["lambda0", "lambda1"])
def test_unit_scale_always_multiplicative(form, action):
    levi = HEISENBERG.levi_table(1, 1)
    assert check_action_multiplicative(partial(form, action), levi, F(1), _samples())["ok"]
