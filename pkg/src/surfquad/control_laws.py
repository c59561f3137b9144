"""Surface-based attitude and position controllers.

The attitude law drives the surface ``s_R = k_R e_R + k_omega e_omega`` to
zero through ``d/dt s_R = -eta k_omega s_R``; the position law builds the
thrust vector from ``s_x = k_x e_x + k_v e_v`` and tracks the attitude that
aligns the body thrust axis with it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike

from .attitude_errors import (
    ErrorSetKind,
    a_d_of,
    e_omega_of,
    e_R_of,
    psi_of,
    transport_matrix,
)
from .errors import DegenerateThrustError, GainError, ParallelHeadingError
from .plant import QuadParams, RigidBodyState
from .reference import E3, ReferenceSignal, Trajectory
from .so3 import Mat3, Vec3, cross

THRUST_EPS = 1e-6
HEADING_EPS = 1e-6
DEFAULT_FD_STEP = 1e-4


@dataclass(frozen=True)
class AttitudeGains:
    k_R: float
    k_omega: float
    eta: float

    def __post_init__(self):
        if min(self.k_R, self.k_omega, self.eta) <= 0:
            raise GainError("attitude gains k_R, k_omega, eta must be positive")

    @property
    def satisfies_condition(self) -> bool:
        """Strict ``eta > k_R / k_omega**2``."""
        return self.eta > self.k_R / self.k_omega**2

    def require_condition(self) -> None:
        if not self.satisfies_condition:
            raise GainError(
                "attitude gain condition violated: eta > k_R/k_omega^2 requires "
                f"{self.eta!r} > {self.k_R / self.k_omega**2!r}"
            )


@dataclass(frozen=True)
class PositionGains:
    k_x: float
    k_v: float
    a: float
    att: AttitudeGains

    def __post_init__(self):
        if min(self.k_x, self.k_v, self.a) <= 0:
            raise GainError("position gains k_x, k_v, a must be positive")


# gains reported for the tuning comparison and the aggressive manoeuvre
TUNED_ATTITUDE = AttitudeGains(k_R=5625.0, k_omega=150.0, eta=0.8)
TUNED_POSITION = PositionGains(k_x=894.62, k_v=59.82, a=0.5071, att=TUNED_ATTITUDE)
SOFT_ATTITUDE = AttitudeGains(k_R=400.0, k_omega=40.0, eta=1.002)
SOFT_POSITION = PositionGains(k_x=12.46, k_v=7.06, a=0.5081, att=SOFT_ATTITUDE)


@dataclass(frozen=True)
class PositionInducedAttitude:
    R_x: Mat3
    omega_x: Vec3
    omega_x_dot: Vec3


@dataclass(frozen=True)
class Command:
    """Controller output with the error signals it was computed from."""

    f: float
    u: Vec3
    psi: float = float("nan")
    e_R: Vec3 | None = None
    e_omega: Vec3 | None = None
    e_x: Vec3 | None = None
    e_v: Vec3 | None = None
    R_d: Mat3 | None = None


# -- attitude ---------------------------------------------------------------


def surface_R(e_R: ArrayLike, e_omega: ArrayLike, g: AttitudeGains) -> Vec3:
    return g.k_R * np.asarray(e_R, float) + g.k_omega * np.asarray(e_omega, float)


def _attitude_terms(state: RigidBodyState, ref: ReferenceSignal, g: AttitudeGains, kind: ErrorSetKind, J: Mat3):
    R, w = state.R, state.w
    e_R = e_R_of(R, ref.R, kind)
    e_w = e_omega_of(R, w, ref.R, ref.omega)
    e_R_dot = transport_matrix(R, ref.R, kind) @ e_w
    a_d = a_d_of(R, w, ref.R, ref.omega, ref.omega_dot)
    s_R = g.k_R * e_R + g.k_omega * e_w
    u = cross(w, J @ w) - J @ ((g.k_R / g.k_omega) * e_R_dot + a_d + g.eta * s_R)
    return u, e_R, e_w


def attitude_control(state: RigidBodyState, ref: ReferenceSignal, g: AttitudeGains,
                     kind: ErrorSetKind, J: ArrayLike) -> Vec3:
    """Body moment tracking ``(ref.R, ref.omega, ref.omega_dot)``."""
    g.require_condition()
    return _attitude_terms(state, ref, g, kind, np.asarray(J, float))[0]


# -- position ---------------------------------------------------------------


def surface_x(e_x: ArrayLike, e_v: ArrayLike, g: PositionGains) -> Vec3:
    return g.k_x * np.asarray(e_x, float) + g.k_v * np.asarray(e_v, float)


def thrust_vector(e_x: ArrayLike, e_v: ArrayLike, acc_d: ArrayLike, g: PositionGains, m: float,
                  grav: float = 9.81) -> Vec3:
    """``m g E3 - m (k_x/k_v) e_v - a s_x + m acc_d``."""
    e_x = np.asarray(e_x, float)
    e_v = np.asarray(e_v, float)
    return (m * grav * E3 - m * (g.k_x / g.k_v) * e_v - g.a * (g.k_x * e_x + g.k_v * e_v)
            + m * np.asarray(acc_d, float))


def desired_thrust_axis(e_x: ArrayLike, e_v: ArrayLike, acc_d: ArrayLike, g: PositionGains, m: float,
                        grav: float = 9.81) -> Vec3:
    U = thrust_vector(e_x, e_v, acc_d, g, m, grav)
    n = float(np.linalg.norm(U))
    if n <= THRUST_EPS:
        raise DegenerateThrustError(f"desired thrust vector has norm {n:.3e} N")
    return U / n


def position_induced_attitude(e_3x: ArrayLike, e_1d: ArrayLike) -> Mat3:
    """Rotation with third column ``e_3x`` and first column the projection of ``e_1d``."""
    e3 = np.asarray(e_3x, float)
    c = cross(e3, np.asarray(e_1d, float))
    nc = float(np.linalg.norm(c))
    if nc <= HEADING_EPS:
        raise ParallelHeadingError("heading direction is parallel to the desired thrust axis")
    p = cross(c, e3)
    e1 = p / np.linalg.norm(p)
    e2 = cross(e3, e1)
    e2 /= np.linalg.norm(e2)
    return np.column_stack((e1, e2, e3))


@lru_cache(maxsize=64)
def _nominal_propagators(kx_over_kv: float, a_over_m: float, k_x: float, k_v: float, h: float):
    """Transition matrices of ``de_x = e_v``, ``m de_v = -m (k_x/k_v) e_v - a s_x`` for offsets -2h..2h."""
    A = np.array([[0.0, 1.0], [-a_over_m * k_x, -kx_over_kv - a_over_m * k_v]])
    out = {}
    for j in (-2, -1, 1, 2):
        M = A * (j * h)
        term = np.eye(2)
        Phi = np.eye(2)
        for n in range(1, 10):
            term = term @ M / n
            Phi = Phi + term
        out[j] = Phi
    return out


def _antisym_vee(M: Mat3) -> Vec3:
    return 0.5 * np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]])


def _errors(state: RigidBodyState, ref: ReferenceSignal) -> tuple[Vec3, Vec3]:
    return state.x - ref.x, state.v - ref.v


def _predicted_errors(state, ref, e_x, e_v, g: PositionGains, m: float, grav: float, h: float, prediction: str):
    """Position/velocity errors at offsets ``j h`` for ``j = -2..2`` (``j = 0`` excluded)."""
    if prediction == "nominal":
        props = _nominal_propagators(g.k_x / g.k_v, g.a / m, g.k_x, g.k_v, h)
        Z = np.vstack([e_x, e_v])
        return {j: props[j] @ Z for j in (-2, -1, 1, 2)}
    if prediction != "plant":
        raise ValueError(f"unknown prediction model {prediction!r}")
    # thrust along the current body axis with the commanded magnitude; rotation at the current rate
    U = thrust_vector(e_x, e_v, ref.acc, g, m, grav)
    b3 = state.R[:, 2]
    f = float(U @ b3)
    ev_dot = f * b3 / m - grav * E3 - ref.acc
    U_dot = -m * (g.k_x / g.k_v) * ev_dot - g.a * (g.k_x * e_v + g.k_v * ev_dot) + m * ref.jerk
    b3_dot = state.R @ np.array([state.w[1], -state.w[0], 0.0])
    f_dot = float(U_dot @ b3 + U @ b3_dot)
    ev_ddot = (f_dot * b3 + f * b3_dot) / m - ref.jerk
    out = {}
    for j in (-2, -1, 1, 2):
        tau = j * h
        ex = e_x + tau * e_v + tau**2 / 2 * ev_dot + tau**3 / 6 * ev_ddot
        ev = e_v + tau * ev_dot + tau**2 / 2 * ev_ddot
        out[j] = (ex, ev)
    return out


def pia_with_derivatives(state: RigidBodyState, trajectory: Trajectory, t: float, g: PositionGains,
                         m: float, grav: float = 9.81, h: float = DEFAULT_FD_STEP,
                         ref: ReferenceSignal | None = None, prediction: str = "plant") -> PositionInducedAttitude:
    """Position-induced attitude with angular velocity and acceleration.

    The rates come from central differences of ``R_x`` over offsets
    ``-2h..2h``; the desired acceleration and heading are sampled from
    ``trajectory`` at those offsets.  Tracking errors at the offsets are
    predicted either from the rigid-body translational dynamics with the
    commanded thrust along the current body axis (``"plant"``, second-order
    Taylor expansion of the velocity error), or from the nominal closed loop
    that neglects the thrust-axis mismatch (``"nominal"``).
    """
    if ref is None:
        ref = trajectory.sample(t)
    e_x, e_v = _errors(state, ref)
    pred = _predicted_errors(state, ref, e_x, e_v, g, m, grav, h, prediction)
    Rs = {0: position_induced_attitude(desired_thrust_axis(e_x, e_v, ref.acc, g, m, grav), ref.heading)}
    for j, (ex, ev) in pred.items():
        r = trajectory.sample(t + j * h)
        Rs[j] = position_induced_attitude(desired_thrust_axis(ex, ev, r.acc, g, m, grav), r.heading)

    def rate(j):
        return _antisym_vee(Rs[j].T @ (Rs[j + 1] - Rs[j - 1])) / (2.0 * h)

    w_m, w_0, w_p = rate(-1), rate(0), rate(1)
    return PositionInducedAttitude(R_x=Rs[0], omega_x=w_0, omega_x_dot=(w_p - w_m) / (2.0 * h))


def position_control(state: RigidBodyState, trajectory: Trajectory, t: float, g: PositionGains,
                     kind: ErrorSetKind, params: QuadParams, h: float = DEFAULT_FD_STEP,
                     prediction: str = "plant") -> tuple[float, Vec3]:
    """Total thrust and body moment of the position mode."""
    g.att.require_condition()
    cmd = _position_command(state, trajectory, t, g, kind, params, h, prediction)
    return cmd.f, cmd.u


def _position_command(state, trajectory, t, g, kind, params, h, prediction="plant") -> Command:
    ref = trajectory.sample(t)
    e_x, e_v = _errors(state, ref)
    U = thrust_vector(e_x, e_v, ref.acc, g, params.m, params.g)
    f = float(U @ state.R[:, 2])
    pia = pia_with_derivatives(state, trajectory, t, g, params.m, params.g, h, ref=ref, prediction=prediction)
    att_ref = ReferenceSignal(R=pia.R_x, omega=pia.omega_x, omega_dot=pia.omega_x_dot)
    u, e_R, e_w = _attitude_terms(state, att_ref, g.att, kind, params.J)
    return Command(f=f, u=u, psi=psi_of(state.R, pia.R_x, kind), e_R=e_R, e_omega=e_w,
                   e_x=e_x, e_v=e_v, R_d=pia.R_x)


# -- controller objects -----------------------------------------------------


class AttitudeController:
    """Attitude-mode controller.  Thrust is held at ``thrust`` (default: hover thrust)."""

    def __init__(self, gains: AttitudeGains, params: QuadParams, kind: ErrorSetKind = ErrorSetKind.SET_ONE,
                 thrust: float | None = None):
        gains.require_condition()
        self.gains = gains
        self.params = params
        self.kind = ErrorSetKind.parse(kind)
        self.thrust = params.hover_thrust if thrust is None else float(thrust)

    def __call__(self, t: float, state: RigidBodyState, trajectory: Trajectory) -> Command:
        ref = trajectory.sample(t)
        u, e_R, e_w = _attitude_terms(state, ref, self.gains, self.kind, self.params.J)
        return Command(f=self.thrust, u=u, psi=psi_of(state.R, ref.R, self.kind), e_R=e_R, e_omega=e_w,
                       R_d=ref.R)


class PositionController:
    """Position-mode controller (thrust along the surface-based thrust vector)."""

    def __init__(self, gains: PositionGains, params: QuadParams, kind: ErrorSetKind = ErrorSetKind.SET_ONE,
                 h: float = DEFAULT_FD_STEP, w3_check: tuple[float, float] | None = None,
                 prediction: str = "plant"):
        gains.att.require_condition()
        if w3_check is not None:
            from .stability_analysis import RoaVariant, build_pi_matrices, check_w3_condition

            B, theta = w3_check
            P1, P2 = build_pi_matrices(gains, params.m, B, theta, RoaVariant.NO_XV)
            if not check_w3_condition(gains.att, P1, P2):
                raise GainError("coupling gain condition lambda_min(W3) > ||Pi2||^2 / (4 eta lambda_min(Pi1)) violated")
        self.gains = gains
        self.params = params
        self.kind = ErrorSetKind.parse(kind)
        self.h = h
        self.prediction = prediction

    def __call__(self, t: float, state: RigidBodyState, trajectory: Trajectory) -> Command:
        return _position_command(state, trajectory, t, self.gains, self.kind, self.params, self.h, self.prediction)


class PDController:
    """Plain PD placeholder for the benchmark slot.

    Thrust vector ``-k_x e_x - k_v e_v + m g E3 + m acc_d``; the attitude loop
    is ``-k_R e_R - k_omega e_omega + w x J w`` with zero desired rate.  Gains
    may be scalars or length-3 diagonals.
    """

    def __init__(self, params: QuadParams, k_x=375.61, k_v=38.71, k_R=(65.16, 70.56, 98.28),
                 k_omega=(2.1720, 2.3520, 3.2760), kind: ErrorSetKind = ErrorSetKind.SET_ONE):
        self.params = params
        self.k_x = np.broadcast_to(np.asarray(k_x, float), 3)
        self.k_v = np.broadcast_to(np.asarray(k_v, float), 3)
        self.k_R = np.broadcast_to(np.asarray(k_R, float), 3)
        self.k_omega = np.broadcast_to(np.asarray(k_omega, float), 3)
        self.kind = ErrorSetKind.parse(kind)

    def _track(self, state, R_d, f):
        p = self.params
        e_R = e_R_of(state.R, R_d, self.kind)
        e_w = state.w.copy()
        u = -self.k_R * e_R - self.k_omega * e_w + cross(state.w, p.J @ state.w)
        return u, e_R, e_w

    def attitude(self, t: float, state: RigidBodyState, trajectory: Trajectory) -> Command:
        ref = trajectory.sample(t)
        u, e_R, e_w = self._track(state, ref.R, self.params.hover_thrust)
        return Command(f=self.params.hover_thrust, u=u, psi=psi_of(state.R, ref.R, self.kind), e_R=e_R,
                       e_omega=e_w, R_d=ref.R)

    def __call__(self, t: float, state: RigidBodyState, trajectory: Trajectory) -> Command:
        p = self.params
        ref = trajectory.sample(t)
        e_x, e_v = _errors(state, ref)
        F = -self.k_x * e_x - self.k_v * e_v + p.m * p.g * E3 + p.m * ref.acc
        n = float(np.linalg.norm(F))
        if n <= THRUST_EPS:
            raise DegenerateThrustError(f"desired thrust vector has norm {n:.3e} N")
        R_d = position_induced_attitude(F / n, ref.heading)
        f = float(F @ state.R[:, 2])
        u, e_R, e_w = self._track(state, R_d, f)
        return Command(f=f, u=u, psi=psi_of(state.R, R_d, self.kind), e_R=e_R, e_omega=e_w,
                       e_x=e_x, e_v=e_v, R_d=R_d)
