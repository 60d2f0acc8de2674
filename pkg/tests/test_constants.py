import math

import pytest
from hypothesis import given, settings, strategies as st

from kirchhoff import constants as C
from kirchhoff.ground_state import ground_state
from kirchhoff.quadrature import beta_oracle, l_constant
from kirchhoff.records import Kind, Method

P_GRID = [1.5, 2.0, 3.0]
RECURSION_GRID = [(p, m * (p + 1) + off) for p in P_GRID for m in (1, 2, 3) for off in (0.0, p)]


def L(k, d):
    return l_constant(k, d).value


@pytest.fixture(params=P_GRID)
def gs(request):
    return ground_state(request.param)


def test_half_interval_moments_without_w(gs):
    assert C.s_quadrature(gs, 1, 0).value == pytest.approx(1 / 8, abs=1e-12)
    assert C.s_quadrature(gs, 2, 0).value == pytest.approx(1 / 24, abs=1e-12)


def test_first_moment_of_w_p_is_xi(gs):
    assert C.s_quadrature(gs, 1, gs.p).value == pytest.approx(gs.xi, rel=1e-10)
    base = C.s_base(gs, 1, gs.p)
    assert base.value == gs.xi and base.method is Method.CLOSED_FORM


def test_s0p_for_cubic():
    gs = ground_state(3.0)
    c = C.s_base(gs, 0, 3.0)
    assert c.value == pytest.approx(math.sqrt(0.5) * gs.xi ** 2, rel=1e-14)
    assert c.value == pytest.approx(9.723, abs=5e-4)
    assert c.value == pytest.approx(C.s_quadrature(gs, 0, 3.0).value, rel=1e-10)


def test_s0q_general_for_cubic():
    gs = ground_state(3.0)
    c = C.s_base(gs, 0, 4.0)
    assert c.value == pytest.approx(math.sqrt(2) * gs.xi ** 3 * L(3, 4), rel=1e-14)
    assert c.value == pytest.approx(C.s_quadrature(gs, 0, 4.0).value, rel=1e-10)


def test_s_base_rejects_pairs_without_closed_form(gs):
    for k, d in ((1, 1.0), (3, gs.p), (2, 2.5)):
        with pytest.raises(C.NoClosedFormError):
            C.s_base(gs, k, d)


def test_s1_one_step(gs):
    p, xi = gs.p, gs.xi
    expected = (p + 1) / (p + 3) * (0.5 * xi ** 2 + xi ** (p + 1) / (4 * (p + 1)))
    c = C.s1_recursion(gs, p + 1)
    assert c.value == pytest.approx(expected, rel=1e-13)
    assert c.method is Method.RECURSION


def test_s1_from_p_branch(gs):
    p, xi = gs.p, gs.xi
    assert C.s1_recursion(gs, 2 * p + 1).value == pytest.approx(
        (2 * p + 5) / (3 * (p + 2)) * xi ** (p + 2), rel=1e-13)
    base = C.s1_recursion(gs, p)
    assert base.value == xi and base.method is Method.CLOSED_FORM


def test_s2_one_step(gs):
    p, xi = gs.p, gs.xi
    expected = (p + 1) / (p + 3) * (
        0.5 * (xi ** 2 - math.sqrt(2 * (p + 1)) * xi ** ((5 - p) / 2) * L(p, 2))
        + xi ** (p + 1) / (12 * (p + 1)))
    assert C.s2_recursion(gs, p + 1).value == pytest.approx(expected, rel=1e-12)


def test_s2_from_p_branch(gs):
    p, xi = gs.p, gs.xi
    expected = ((2 * p + 5) / (3 * (p + 2)) * xi ** (p + 2)
                - math.sqrt(2 * (p + 1)) / 3 * xi ** ((p + 5) / 2) * (L(p, p + 2) / (p + 2) + 2 * L(p, 1)))
    assert C.s2_recursion(gs, 2 * p + 1).value == pytest.approx(expected, rel=1e-12)


def test_s2_cubic_quartic_against_quadrature():
    gs = ground_state(3.0)
    assert C.s2_recursion(gs, 4.0).value == pytest.approx(C.s_quadrature(gs, 2, 4.0).value, rel=1e-8)


@pytest.mark.parametrize("q", [2.5, 4.2, 1.7])
def test_unreachable_index_is_rejected(q):
    gs = ground_state(3.0)
    with pytest.raises(C.UnsupportedIndexError):
        C.s1_recursion(gs, q)
    with pytest.raises(C.UnsupportedIndexError):
        C.s2_recursion(gs, q)


@pytest.mark.parametrize("p,q", RECURSION_GRID)
def test_recursions_against_quadrature(p, q):
    gs = ground_state(p)
    for k, c in ((1, C.s1_recursion(gs, q)), (2, C.s2_recursion(gs, q))):
        assert c.value == pytest.approx(C.s_quadrature(gs, k, q).value, rel=1e-8)
    m2 = C.m_constant(gs, 2, q)
    assert m2.value == pytest.approx(C.m_quadrature(gs, 2, q).value, rel=1e-8)
    assert m2.method is not Method.QUADRATURE


def test_reduction_r2_is_closed_form(gs):
    p, xi = gs.p, gs.xi
    c = C.s_rp_reduction(gs, 2)
    assert c.value == pytest.approx(xi - math.sqrt(2 * (p + 1)) * xi ** ((3 - p) / 2) * L(p, 1), rel=1e-13)
    assert c.method is Method.RECURSION
    assert c.value == pytest.approx(C.s_quadrature(gs, 2, p).value, rel=1e-8)


def test_reduction_r3_cubic():
    gs = ground_state(3.0)
    c = C.s_rp_reduction(gs, 3)
    assert c.value == pytest.approx(0.75 * gs.xi - 6 * C.s_quadrature(gs, 1, 1.0).value, rel=1e-14)
    assert c.value == pytest.approx(C.s_quadrature(gs, 3, 3.0).value, rel=1e-8)
    assert c.method is Method.QUADRATURE


@pytest.mark.parametrize("r", [4, 5])
def test_reduction_higher_r(gs, r):
    assert C.s_rp_reduction(gs, r).value == pytest.approx(C.s_quadrature(gs, r, gs.p).value, rel=1e-8)


def test_m0_is_the_norm(gs):
    p, xi = gs.p, gs.xi
    for q in (p, 2.5):
        expected = 2 * math.sqrt((p + 1) / 2) * xi ** ((2 * q - p + 1) / 2) * L(p, q)
        assert C.m_constant(gs, 0, q).value == pytest.approx(expected, rel=1e-14)


def test_m1_cubic():
    gs = ground_state(3.0)
    c = C.m_constant(gs, 1, 3.0)
    # exponent (2q - p + 1)/2 = 2 at p = q = 3, and L_{3,3} = 1/2
    assert c.value == pytest.approx(math.sqrt(2) * gs.xi ** 2 * 0.5, rel=1e-12)
    quad = C.m_quadrature(gs, 1, 3.0).value
    assert c.value == pytest.approx(quad, rel=1e-10)
    assert C.relative_delta(math.sqrt(2) * gs.xi ** 2.5 * 0.5, quad) > 0.5


def test_m1_cubic_square_is_pi():
    # 4 L_{3,0} L_{3,2} = B(1/4,1/2) B(3/4,1/2) / 4 = pi
    gs = ground_state(3.0)
    assert C.m_constant(gs, 1, 2.0).value == pytest.approx(math.pi, rel=1e-13)
    assert beta_oracle(0.25, 0.5) * beta_oracle(0.75, 0.5) / 4 == pytest.approx(math.pi, rel=1e-14)


def test_m2_p_plus_1(gs):
    c = C.m_constant(gs, 2, gs.p + 1)
    assert c.method is Method.CLOSED_FORM
    assert c.value == pytest.approx(C.m_quadrature(gs, 2, gs.p + 1).value, rel=1e-8)


def test_m2_p_plus_1_alternative_form_is_off(gs):
    quad = C.m_quadrature(gs, 2, gs.p + 1).value
    assert C.relative_delta(C.m2_q_p1_alternative(gs), quad) > 0.1


def test_m2_2p_plus_1_and_m3(gs):
    p = gs.p
    assert C.m_constant(gs, 2, 2 * p + 1).value == pytest.approx(C.m_quadrature(gs, 2, 2 * p + 1).value, rel=1e-8)
    expected = (math.sqrt(2 / (p + 1)) * gs.xi ** ((p + 1) / 2)
                - 3 * math.sqrt(2 * (p + 1)) * gs.xi ** ((3 - p) / 2) * L(p, 1))
    m3 = C.m_constant(gs, 3, p)
    assert m3.value == pytest.approx(expected, rel=1e-13)
    assert m3.value == pytest.approx(C.m_quadrature(gs, 3, p).value, rel=1e-8)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_binomial_sum(gs, n):
    assert C.m_binomial(gs, n).value == pytest.approx(C.m_quadrature(gs, n, gs.p).value, rel=1e-8)


def test_m_falls_back_to_quadrature(gs):
    c = C.m_constant(gs, 4, 2.7)
    assert c.method is Method.QUADRATURE and c.kind is Kind.M
    assert c.value == C.m_quadrature(gs, 4, 2.7).value


def test_m_rejects_bad_n(gs):
    for n in (-1, 1.5):
        with pytest.raises(ValueError):
            C.m_constant(gs, n, 2.0)


def test_r_constant_examples():
    gs = ground_state(3.0)
    for q in (2.0, 3.0, 4.5):
        assert C.r_constant(gs, 1, q).value == pytest.approx(C.s_base(gs, 0, q).value, rel=1e-10)
        assert C.r_constant(gs, 1, q).value == pytest.approx(C.r_quadrature(gs, 1, q).value, rel=1e-10)
        assert C.r_constant(gs, 0, q).value == pytest.approx(C.m_constant(gs, 0, q).value, rel=1e-14)
    assert C.r_constant(gs, 2, 4.0).value == pytest.approx(C.r_quadrature(gs, 2, 4.0).value, rel=1e-8)


@pytest.mark.parametrize("p,q", RECURSION_GRID[::3])
def test_m2_equals_r2(p, q):
    gs = ground_state(p)
    assert C.m_quadrature(gs, 2, q).value == pytest.approx(C.r_quadrature(gs, 2, q).value, rel=1e-9)
    assert C.m_constant(gs, 2, q).value == pytest.approx(C.r_constant(gs, 2, q).value, rel=1e-9)


@pytest.mark.parametrize("q", [1.5, 2.0, 3.5, 6.0])
def test_telescoping(gs, q):
    norm = C.m_quadrature(gs, 0, q).value
    r1 = C.r_quadrature(gs, 1, q).value
    assert C.m_constant(gs, 1, q).value == pytest.approx(norm - r1, rel=1e-9)


def test_descent_validation():
    assert C.descent(3.0, 8.0) == (0.0, 2)
    assert C.descent(3.0, 11.0) == (3.0, 2)
    with pytest.raises(C.UnsupportedIndexError):
        C.descent(3.0, 8.0 + 1e-9)


def test_values_are_nonnegative_records(gs):
    for c in (C.m_constant(gs, 3, gs.p), C.s_rp_reduction(gs, 4), C.r_constant(gs, 2, gs.p + 1)):
        assert c.value >= 0 and float(c) == c.value and c.p == gs.p


@settings(max_examples=15, deadline=None)
@given(p=st.floats(1.2, 6.0), q=st.floats(1.1, 9.0))
def test_half_norm_matches_quadrature(p, q):
    gs = ground_state(p)
    assert C.m_constant(gs, 1, q).value == pytest.approx(C.m_quadrature(gs, 1, q).value, rel=1e-8)


@settings(max_examples=15, deadline=None)
@given(p=st.floats(1.2, 6.0), m=st.integers(1, 3), shifted=st.booleans())
def test_recursion_property(p, m, shifted):
    gs = ground_state(p)
    q = m * (p + 1) + (p if shifted else 0.0)
    assert C.s1_recursion(gs, q).value == pytest.approx(C.s_quadrature(gs, 1, q).value, rel=1e-8)
    assert C.s2_recursion(gs, q).value == pytest.approx(C.s_quadrature(gs, 2, q).value, rel=1e-8)
