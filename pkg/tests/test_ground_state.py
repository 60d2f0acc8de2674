import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kirchhoff.ground_state import (TABLE_SIZE, OracleFailure, evaluate_w, evaluate_w_prime,
                                    ground_state, shoot_ode_oracle, sup_norm_xi, time_map_x_of_w)
from kirchhoff.quadrature import Integrand, integrate_adaptive, l_constant

P_GRID = [1.5, 2.0, 3.0, 5.0]


def test_xi_for_cubic():
    xi = sup_norm_xi(3)
    assert xi == pytest.approx(3.70815, abs=5e-6)
    assert xi == pytest.approx(2 * math.sqrt(2) * l_constant(3, 0).value, rel=1e-14)


@pytest.mark.parametrize("p", [1.0, 0.5, -2.0])
def test_xi_domain(p):
    with pytest.raises(ValueError):
        sup_norm_xi(p)


@pytest.mark.parametrize("p", P_GRID)
def test_time_map_endpoints(p):
    gs = ground_state(p)
    assert time_map_x_of_w(gs, 0.0) == 0.0
    assert abs(time_map_x_of_w(gs, gs.xi) - 0.5) <= 1e-10


def test_time_map_half_amplitude_against_adaptive_quadrature():
    p = 3.0
    gs = ground_state(p)
    g = Integrand(lambda s: 1 / np.sqrt(1 - s ** (p + 1)))
    partial = integrate_adaptive(g, 0.0, 0.5, 1e-13).value
    expected = math.sqrt((p + 1) / 2) * gs.xi ** ((1 - p) / 2) * partial
    assert time_map_x_of_w(gs, gs.xi / 2) == pytest.approx(expected, rel=1e-12)


def test_time_map_domain():
    gs = ground_state(2.0)
    for w in (-1e-3, gs.xi * (1 + 1e-9), float("nan")):
        with pytest.raises(ValueError):
            time_map_x_of_w(gs, w)


@pytest.mark.parametrize("p", P_GRID)
def test_table_invariants(p):
    gs = ground_state(p)
    assert gs.table_x.size == TABLE_SIZE
    assert np.all(np.diff(gs.table_x) > 0) and np.all(np.diff(gs.table_w) > 0)
    assert (gs.table_x[0], gs.table_w[0]) == (0.0, 0.0)
    assert (gs.table_x[-1], gs.table_w[-1]) == (0.5, gs.xi)
    assert gs.xi == pytest.approx(sup_norm_xi(p), rel=1e-10)


def test_ground_state_is_immutable():
    gs = ground_state(2.0)
    with pytest.raises(Exception):
        gs.xi = 1.0
    with pytest.raises(ValueError):
        gs.table_w[3] = 0.0


@pytest.mark.parametrize("p", P_GRID)
def test_boundary_and_peak(p):
    gs = ground_state(p)
    assert evaluate_w(gs, 0.0) == 0.0 and evaluate_w(gs, 1.0) == 0.0
    assert evaluate_w(gs, 0.5) == pytest.approx(gs.xi, rel=1e-15)


def test_quarter_point_against_shooting():
    gs = ground_state(2.0)
    shot = shoot_ode_oracle(2.0, 10_000)
    assert abs(evaluate_w(gs, 0.25) - shot[2500]) <= 1e-6


def test_evaluate_domain():
    gs = ground_state(2.0)
    for x in (-0.1, 1.0001, float("nan")):
        with pytest.raises(ValueError):
            evaluate_w(gs, x)


def test_vector_evaluation_shape():
    gs = ground_state(2.0)
    x = np.linspace(0, 1, 12).reshape(3, 4)
    assert evaluate_w(gs, x).shape == (3, 4)
    assert np.ndim(evaluate_w(gs, 0.3)) == 0


@pytest.mark.parametrize("p", P_GRID)
def test_slope_at_peak_and_boundary(p):
    gs = ground_state(p)
    assert evaluate_w_prime(gs, 0.5) == 0.0
    expected = math.sqrt(2 / (p + 1)) * gs.xi ** ((p + 1) / 2)
    assert evaluate_w_prime(gs, 0.0) == pytest.approx(expected, rel=1e-14)
    assert evaluate_w_prime(gs, 1.0) == pytest.approx(-expected, rel=1e-14)


def test_slope_against_finite_difference():
    gs = ground_state(3.0)
    h = 1e-5
    fd = (evaluate_w(gs, 0.3 + h) - evaluate_w(gs, 0.3 - h)) / (2 * h)
    assert abs(evaluate_w_prime(gs, 0.3) - fd) <= 1e-6


def test_shooting_lands_on_zero():
    shot = shoot_ode_oracle(2.0, 10_000)
    assert abs(shot[-1]) <= 1e-8


def test_shooting_boundary_error_decays_fast():
    coarse = abs(shoot_ode_oracle(2.0, 200)[-1])
    fine = abs(shoot_ode_oracle(2.0, 400)[-1])
    assert fine < coarse / 10


def test_shooting_peak_and_symmetry():
    shot = shoot_ode_oracle(3.0, 10_000)
    assert abs(shot.max() - 3.70815) <= 1e-5
    assert abs(shot.max() - sup_norm_xi(3.0)) <= 1e-6
    assert np.max(np.abs(shot - shot[::-1])) <= 1e-8


def test_shooting_rejects_coarse_mesh_and_blows_up_on_wrong_scale():
    with pytest.raises(ValueError):
        shoot_ode_oracle(2.0, 50)
    # a huge amplitude makes the fixed step unstable
    with pytest.raises(OracleFailure):
        shoot_ode_oracle(3.0, 100, xi=1e4)


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_shooting_matches_time_map(p):
    mesh = 10_000
    shot = shoot_ode_oracle(p, mesh)
    w = evaluate_w(ground_state(p), np.arange(mesh + 1) / mesh)
    assert np.max(np.abs(shot - w)) <= 1e-6


@pytest.mark.parametrize("p", [2.0, 3.0, 5.0])
def test_second_difference_residual_is_second_order(p):
    gs = ground_state(p)
    norms = []
    for n in (256, 512, 1024):
        w = evaluate_w(gs, np.arange(n + 1) / n)
        norms.append(np.max(np.abs((w[:-2] - 2 * w[1:-1] + w[2:]) * n * n + w[1:-1] ** p)))
    orders = np.log2(np.array(norms[:-1]) / np.array(norms[1:]))
    assert np.all(orders >= 1.8)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_lq_norm_identity(p):
    gs = ground_state(p)
    for q in (p, p + 1, 2 * p + 1):
        quad = integrate_adaptive(lambda x: evaluate_w(gs, x) ** q, 0.0, 1.0, 1e-300, rtol=1e-13)
        closed = 2 * math.sqrt((p + 1) / 2) * gs.xi ** ((2 * q - p + 1) / 2) * l_constant(p, q).value
        assert quad.value == pytest.approx(closed, rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(p=st.floats(1.1, 12.0), x=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=20))
def test_energy_identity(p, x):
    gs = ground_state(p)
    x = np.array(x)
    energy = 0.5 * evaluate_w_prime(gs, x) ** 2 + evaluate_w(gs, x) ** (p + 1) / (p + 1)
    ref = gs.xi ** (p + 1) / (p + 1)
    assert np.max(np.abs(energy - ref)) <= 1e-9 * ref


@settings(max_examples=25, deadline=None)
@given(p=st.floats(1.1, 12.0), x=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=20))
def test_symmetry(p, x):
    gs = ground_state(p)
    x = np.array(x)
    assert np.max(np.abs(evaluate_w(gs, x) - evaluate_w(gs, 1 - x))) <= 1e-10 * gs.xi


@settings(max_examples=20, deadline=None)
@given(p=st.floats(1.1, 12.0))
def test_monotone_on_left_half(p):
    gs = ground_state(p)
    w = evaluate_w(gs, np.linspace(0.0, 0.5, 2001))
    assert np.all(np.diff(w) > 0)


@settings(max_examples=25, deadline=None)
@given(p=st.floats(1.1, 12.0), s=st.floats(0.0, 1.0))
def test_round_trip_through_time_map(p, s):
    gs = ground_state(p)
    w = s * gs.xi
    x = time_map_x_of_w(gs, w)
    assert 0.0 <= x <= 0.5
    assert abs(evaluate_w(gs, x) - w) <= 1e-10 * gs.xi
