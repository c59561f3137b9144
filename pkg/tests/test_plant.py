from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from surfquad.plant import (
    Disturbance,
    GustProfile,
    QuadParams,
    RigidBodyState,
    WindModel,
    WindTable,
    allocate,
    apply_actuators,
    derivative,
    forward_map,
    integrate,
    saturate,
    step,
    wind_disturbance,
)
from surfquad.so3 import exp_so3, hat, orthonormality_residual, rot_axis

from .strategies import rotations, vec3

E1, E2, E3 = np.eye(3)


def test_allocate_equal_split(params):
    np.testing.assert_allclose(allocate(4.0, np.zeros(3), params), np.ones(4), atol=1e-15)


def test_allocate_hover(params):
    assert params.hover_thrust == pytest.approx(12.0172, abs=5e-5)
    np.testing.assert_allclose(allocate(params.hover_thrust, np.zeros(3), params), 1.225 * 9.81 / 4, rtol=1e-15)
    np.testing.assert_allclose(allocate(params.hover_thrust, np.zeros(3), params), 3.0043, atol=5e-5)


def test_forward_map_single_motor(params):
    f, u = forward_map([0, 1, 0, 0], params)
    assert f == 1.0
    np.testing.assert_allclose(u, [0.23, 0, 0.0121], atol=1e-16)


def test_allocate_inverts_mixer(params):
    np.testing.assert_allclose(params.mixer @ np.linalg.inv(params.mixer), np.eye(4), atol=1e-14)
    F = np.array([0.5, 1.5, 2.5, 3.5])
    f, u = forward_map(F, params)
    np.testing.assert_allclose(params.mixer @ F, np.r_[f, u], atol=1e-15)


@given(st.floats(0, 30), vec3)
def test_allocation_round_trip(f, u):
    p = QuadParams()
    u = u / 10
    f2, u2 = forward_map(allocate(f, u, p), p)
    assert f2 == pytest.approx(f, abs=1e-12)
    np.testing.assert_allclose(u2, u, atol=1e-12)


def test_saturate_examples(params):
    F, flags = saturate([1, 1, 1, 1], params)
    np.testing.assert_array_equal(F, np.ones(4))
    assert not flags.any()
    F, flags = saturate([8, -1, 3, 3], params)
    np.testing.assert_array_equal(F, [6.9939, 0, 3, 3])
    np.testing.assert_array_equal(flags, [True, True, False, False])
    F, flags = saturate([6.9939, 0.0, 1, 1], params)
    assert not flags.any()


def test_apply_actuators_uses_achieved_wrench(params):
    out = apply_actuators(40.0, np.zeros(3), params, limit=True)
    assert out.saturated.all()
    assert out.f == pytest.approx(4 * 6.9939)
    assert out.f_cmd == 40.0
    free = apply_actuators(40.0, np.zeros(3), params, limit=False)
    assert free.f == 40.0 and not free.saturated.any()


def test_params_validation():
    with pytest.raises(ValueError):
        QuadParams(J=np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(ValueError):
        QuadParams(m=0.0)
    with pytest.raises(ValueError):
        QuadParams(f_min=2.0, f_max=1.0)


def test_wind_zero():
    d = wind_disturbance(RigidBodyState.at_rest(), WindModel(lambda t: np.zeros(3)), 0.0)
    np.testing.assert_array_equal(d.delta_x, 0)
    np.testing.assert_array_equal(d.delta_R, 0)


def test_wind_drag_force_and_moment():
    d = wind_disturbance(RigidBodyState.at_rest(), WindModel(lambda t: np.array([10.0, 0, 0])), 0.0)
    np.testing.assert_allclose(d.delta_x, [1.111075, 0, 0], rtol=1e-12)
    np.testing.assert_allclose(d.delta_R, [0, 0.04 * 1.111075, 0], rtol=1e-12)
    np.testing.assert_allclose(d.delta_R, np.cross(0.04 * E3, d.delta_x), rtol=1e-12)


def test_wind_moment_uses_body_frame():
    R = rot_axis(2, np.pi / 2)
    s = RigidBodyState(np.zeros(3), np.zeros(3), R, np.zeros(3))
    d = wind_disturbance(s, WindModel(lambda t: np.array([10.0, 0, 0])), 0.0)
    np.testing.assert_allclose(d.delta_R, np.cross(0.04 * E3, R.T @ d.delta_x), atol=1e-15)


def test_wind_opposes_own_motion():
    s = RigidBodyState(np.zeros(3), np.array([0.0, 2.0, 0.0]), np.eye(3), np.zeros(3))
    d = wind_disturbance(s, WindModel(lambda t: np.zeros(3)), 0.0)
    assert d.delta_x[1] < 0


def test_wind_table_interpolates_and_reads_csv(tmp_path):
    tab = WindTable(np.array([0.0, 1.0]), np.array([[0.0, 0, 0], [2.0, 0, 0]]))
    np.testing.assert_allclose(tab(0.5), [1, 0, 0])
    path = tmp_path / "wind.csv"
    path.write_text("t,wx,wy,wz\n0,0,0,0\n1,2,0,0\n")
    np.testing.assert_allclose(WindTable.from_csv(path)(0.25), [0.5, 0, 0])
    bad = tmp_path / "bad.csv"
    bad.write_text("t,wx\n0,1\n")
    with pytest.raises(ValueError):
        WindTable.from_csv(bad)


def test_gust_profile_shape_and_seed():
    g = GustProfile(amplitude=4.0, t_start=1.0, duration=2.0)
    np.testing.assert_allclose(g(0.5), 0)
    np.testing.assert_allclose(g(2.0), [4, 0, 0])
    a, b = GustProfile(turbulence=1.0, seed=3), GustProfile(turbulence=1.0, seed=3)
    np.testing.assert_array_equal(a(1.7), b(1.7))


def test_derivative_hover_equilibrium(params):
    d = derivative(RigidBodyState.at_rest(), params.hover_thrust, np.zeros(3), Disturbance(), params)
    for part in (d.x_dot, d.v_dot, d.R_dot, d.w_dot):
        np.testing.assert_allclose(part, 0, atol=1e-15)


def test_derivative_free_fall(params):
    d = derivative(RigidBodyState.at_rest(), 0.0, np.zeros(3), Disturbance(), params)
    np.testing.assert_allclose(d.v_dot, -9.81 * E3)


@given(rotations(), vec3, vec3, st.floats(0, 30), vec3, vec3, vec3)
def test_derivative_term_by_term(R, v, w, f, u, dx, dR):
    p = QuadParams()
    s = RigidBodyState(np.zeros(3), v, R, w)
    d = derivative(s, f, u, Disturbance(dx, dR), p)
    np.testing.assert_allclose(d.x_dot, v)
    np.testing.assert_allclose(d.v_dot, (-p.m * p.g * E3 + f * R @ E3 + dx) / p.m, atol=1e-12)
    np.testing.assert_allclose(d.R_dot, R @ hat(w), atol=1e-12)
    np.testing.assert_allclose(p.J @ d.w_dot + np.cross(w, p.J @ w), u + dR, atol=1e-10)


def test_step_hover_unchanged(params):
    s0 = RigidBodyState.at_rest([1.0, 2.0, 3.0])
    s1, out = step(s0, 0.0, lambda t, s: (params.hover_thrust, np.zeros(3)), params, 1e-3)
    np.testing.assert_allclose(s1.x, s0.x, atol=1e-12)
    np.testing.assert_allclose(s1.v, 0, atol=1e-12)
    np.testing.assert_allclose(s1.R, np.eye(3), atol=1e-12)
    assert not out.saturated.any()


def test_integrate_rejects_bad_step(params):
    with pytest.raises(ValueError):
        integrate(RigidBodyState.at_rest(), 0.0, np.zeros(3), params, 0.0)


def test_pure_yaw_rotation():
    p = QuadParams(J=np.eye(3) * 0.02)
    s = RigidBodyState(np.zeros(3), np.zeros(3), np.eye(3), np.array([0.0, 0.0, 1.0]))
    n = 1571
    dt = (np.pi / 2) / n
    for k in range(n):
        s = integrate(s, p.hover_thrust, np.zeros(3), p, dt, t=k * dt)
    np.testing.assert_allclose(s.R, rot_axis(2, np.pi / 2), atol=1e-9)


def test_free_fall_closed_form(params):
    s = RigidBodyState(np.zeros(3), np.array([1.0, 0, 0]), np.eye(3), np.zeros(3))
    for k in range(1000):
        s = integrate(s, 0.0, np.zeros(3), params, 1e-3)
    np.testing.assert_allclose(s.x, [1.0, 0, -0.5 * 9.81], atol=1e-12)


def torque_free_tumble(params, seconds=10.0, dt=1e-3):
    w0 = np.array([0.3, 2.0, 0.2])
    s = RigidBodyState(np.zeros(3), np.zeros(3), exp_so3([0.2, -0.1, 0.4]), w0)
    J = params.J
    T0, L0 = w0 @ J @ w0, np.linalg.norm(J @ w0)
    drift = 0.0
    worst_T = worst_L = 0.0
    for k in range(int(round(seconds / dt))):
        s = integrate(s, params.hover_thrust, np.zeros(3), params, dt, t=k * dt)
        worst_T = max(worst_T, abs(s.w @ J @ s.w - T0) / T0)
        worst_L = max(worst_L, abs(np.linalg.norm(J @ s.w) - L0) / L0)
        drift = max(drift, orthonormality_residual(s.R))
    return worst_T, worst_L, drift, s


def test_torque_free_tumble_conserves_energy_and_momentum(params):
    worst_T, worst_L, drift, s = torque_free_tumble(params, seconds=2.0)
    assert worst_T < 1e-7 and worst_L < 1e-7 and drift < 1e-9


def test_inertial_angular_momentum_is_constant(params):
    w0 = np.array([0.3, 2.0, 0.2])
    s = RigidBodyState(np.zeros(3), np.zeros(3), np.eye(3), w0)
    H0 = params.J @ w0
    for k in range(1000):
        s = integrate(s, 0.0, np.zeros(3), params, 1e-3)
    np.testing.assert_allclose(s.R @ params.J @ s.w, H0, atol=1e-9)
