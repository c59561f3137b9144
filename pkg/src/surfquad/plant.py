"""Quadrotor rigid-body model, thrust allocation and wind disturbance.

State convention: ``x``, ``v`` inertial; ``R`` maps body to inertial;
``w`` is the body angular velocity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Protocol

import numpy as np
from numpy.typing import ArrayLike

from .so3 import Mat3, Vec3, cross, exp_so3, orthonormality_residual, project_so3

E3 = np.array([0.0, 0.0, 1.0])
REPROJECT_TOL = 1e-10


@dataclass(frozen=True)
class QuadParams:
    """Physical parameters; defaults are the real airframe used in the simulation study."""

    J: Mat3 = field(default_factory=lambda: np.diag([0.0181, 0.0196, 0.0273]))
    m: float = 1.225
    d: float = 0.23
    b_T: float = 0.0121
    g: float = 9.81
    f_min: float = 0.0
    f_max: float = 6.9939

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        object.__setattr__(self, "J", J)
        if J.shape != (3, 3) or not np.allclose(J, J.T) or np.any(np.linalg.eigvalsh(J) <= 0):
            raise ValueError("inertia must be a symmetric positive definite 3x3 matrix")
        if self.m <= 0 or self.d <= 0 or self.b_T <= 0:
            raise ValueError("m, d and b_T must be positive")
        if not self.f_min < self.f_max:
            raise ValueError("f_min must be smaller than f_max")
        object.__setattr__(self, "J_inv", np.linalg.inv(J))

    @property
    def mixer(self) -> np.ndarray:
        """Map from the four motor thrusts to ``[f, u1, u2, u3]``."""
        d, b = self.d, self.b_T
        return np.array([
            [1.0, 1.0, 1.0, 1.0],
            [0.0, d, 0.0, -d],
            [-d, 0.0, d, 0.0],
            [-b, b, -b, b],
        ])

    @property
    def hover_thrust(self) -> float:
        return self.m * self.g


@dataclass(frozen=True)
class RigidBodyState:
    x: Vec3
    v: Vec3
    R: Mat3
    w: Vec3

    @classmethod
    def at_rest(cls, x: ArrayLike = (0.0, 0.0, 0.0), R: ArrayLike | None = None) -> "RigidBodyState":
        return cls(
            x=np.asarray(x, dtype=float).copy(),
            v=np.zeros(3),
            R=np.eye(3) if R is None else np.asarray(R, dtype=float).copy(),
            w=np.zeros(3),
        )


@dataclass(frozen=True)
class Disturbance:
    delta_x: Vec3 = field(default_factory=lambda: np.zeros(3))
    delta_R: Vec3 = field(default_factory=lambda: np.zeros(3))


NO_DISTURBANCE = Disturbance()


@dataclass(frozen=True)
class ControlOutput:
    """Wrench actually applied to the airframe over one step."""

    f: float
    u: Vec3
    F: np.ndarray
    saturated: np.ndarray
    f_cmd: float
    u_cmd: Vec3


def allocate(f: float, u: ArrayLike, p: QuadParams) -> np.ndarray:
    """Motor thrusts producing total thrust ``f`` and body moment ``u``."""
    u1, u2, u3 = np.asarray(u, dtype=float)
    q = 0.25 * f
    a = u1 / (2.0 * p.d)
    b = u2 / (2.0 * p.d)
    c = u3 / (4.0 * p.b_T)
    return np.array([q - b - c, q + a + c, q + b - c, q - a + c])


def forward_map(F: ArrayLike, p: QuadParams) -> tuple[float, Vec3]:
    """Total thrust and body moment produced by motor thrusts ``F``."""
    F1, F2, F3, F4 = np.asarray(F, dtype=float)
    f = F1 + F2 + F3 + F4
    u = np.array([p.d * (F2 - F4), p.d * (F3 - F1), p.b_T * (-F1 + F2 - F3 + F4)])
    return f, u


def saturate(F: ArrayLike, p: QuadParams) -> tuple[np.ndarray, np.ndarray]:
    """Clamp each motor to ``[f_min, f_max]``; flags mark clamped motors."""
    F = np.asarray(F, dtype=float)
    clamped = np.clip(F, p.f_min, p.f_max)
    return clamped, clamped != F


def apply_actuators(f: float, u: ArrayLike, p: QuadParams, limit: bool = True) -> ControlOutput:
    u = np.asarray(u, dtype=float)
    F = allocate(f, u, p)
    if not limit:
        return ControlOutput(f=float(f), u=u, F=F, saturated=np.zeros(4, dtype=bool), f_cmd=float(f), u_cmd=u)
    Fc, flags = saturate(F, p)
    if not flags.any():
        return ControlOutput(f=float(f), u=u, F=F, saturated=flags, f_cmd=float(f), u_cmd=u)
    fa, ua = forward_map(Fc, p)
    return ControlOutput(f=fa, u=ua, F=Fc, saturated=flags, f_cmd=float(f), u_cmd=u)


# -- wind -------------------------------------------------------------------


class WindProfile(Protocol):
    def __call__(self, t: float) -> Vec3: ...


@dataclass(frozen=True)
class WindTable:
    """Piecewise-linear wind velocity table; endpoints are held outside the range."""

    t: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        vel = np.asarray(self.velocity, dtype=float).reshape(-1, 3)
        if t.ndim != 1 or len(t) != len(vel) or len(t) == 0:
            raise ValueError("wind table needs matching time and velocity rows")
        if np.any(np.diff(t) <= 0):
            raise ValueError("wind table times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "velocity", vel)

    def __call__(self, t: float) -> Vec3:
        return np.array([np.interp(t, self.t, self.velocity[:, k]) for k in range(3)])

    @classmethod
    def from_csv(cls, path: str | Path) -> "WindTable":
        """Read ``t, wx, wy, wz`` rows; a non-numeric first row is a header, ``#`` lines are comments."""
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.reader(fh):
                if not rec or rec[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append([float(c) for c in rec[:4]])
                except ValueError:
                    if rows:
                        raise
                    continue
        if not rows or any(len(r) != 4 for r in rows):
            raise ValueError(f"{path}: expected rows of t, wx, wy, wz")
        arr = np.array(rows)
        return cls(t=arr[:, 0], velocity=arr[:, 1:])


@dataclass(frozen=True)
class GustProfile:
    """Steady wind plus a one-minus-cosine gust and optional seeded turbulence.

    The turbulence is a sum of ``n_modes`` sinusoids with frequencies in
    ``[0.1, 2]`` Hz and random phases drawn from ``seed``.
    """

    steady: tuple[float, float, float] = (0.0, 0.0, 0.0)
    amplitude: float = 0.0
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    t_start: float = 0.0
    duration: float = 1.0
    turbulence: float = 0.0
    n_modes: int = 8
    seed: int = 0

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        object.__setattr__(self, "_freq", 2 * np.pi * rng.uniform(0.1, 2.0, size=(self.n_modes, 3)))
        object.__setattr__(self, "_phase", rng.uniform(0, 2 * np.pi, size=(self.n_modes, 3)))
        d = np.asarray(self.direction, dtype=float)
        object.__setattr__(self, "_dir", d / np.linalg.norm(d))

    def __call__(self, t: float) -> Vec3:
        w = np.array(self.steady, dtype=float)
        s = t - self.t_start
        if self.amplitude and 0.0 <= s <= self.duration:
            w = w + 0.5 * self.amplitude * (1.0 - np.cos(2 * np.pi * s / self.duration)) * self._dir
        if self.turbulence:
            w = w + self.turbulence / np.sqrt(self.n_modes) * np.sin(self._freq * t + self._phase).sum(axis=0)
        return w


@dataclass(frozen=True)
class WindModel:
    """Drag-equation wind model.  ``C_D`` and ``A_D`` hold the diagonal entries."""

    profile: Callable[[float], Vec3]
    C_D: tuple[float, float, float] = (0.2, 0.22, 0.5)
    A_D: tuple[float, float, float] = (0.0907, 0.0907, 0.4004)
    rho: float = 1.225
    torque_arm: float = 0.04

    def __post_init__(self):
        if min(self.C_D) < 0 or min(self.A_D) < 0:
            raise ValueError("drag coefficients and areas must be nonnegative")
        if self.rho <= 0:
            raise ValueError("air density must be positive")


def wind_disturbance(state: RigidBodyState, wind: WindModel, t: float) -> Disturbance:
    v_rel = np.asarray(wind.profile(t), dtype=float) - state.v
    coeff = 0.5 * wind.rho * np.asarray(wind.C_D) * np.asarray(wind.A_D)
    delta_x = coeff * np.linalg.norm(v_rel) * v_rel
    delta_R = cross(wind.torque_arm * E3, state.R.T @ delta_x)
    return Disturbance(delta_x=delta_x, delta_R=delta_R)


# -- dynamics ---------------------------------------------------------------


@dataclass(frozen=True)
class StateDerivative:
    x_dot: Vec3
    v_dot: Vec3
    R_dot: Mat3
    w_dot: Vec3


def _accelerations(R, w, f, u, dist: Disturbance, p: QuadParams) -> tuple[Vec3, Vec3]:
    v_dot = (-p.m * p.g * E3 + f * R[:, 2] + dist.delta_x) / p.m
    w_dot = p.J_inv @ (u - cross(w, p.J @ w) + dist.delta_R)
    return v_dot, w_dot


def derivative(state: RigidBodyState, f: float, u: ArrayLike, dist: Disturbance, p: QuadParams) -> StateDerivative:
    """Right-hand side of the rigid-body equations of motion."""
    u = np.asarray(u, dtype=float)
    v_dot, w_dot = _accelerations(state.R, state.w, f, u, dist, p)
    R_dot = state.R @ np.array([[0.0, -state.w[2], state.w[1]],
                                [state.w[2], 0.0, -state.w[0]],
                                [-state.w[1], state.w[0], 0.0]])
    return StateDerivative(x_dot=state.v.copy(), v_dot=v_dot, R_dot=R_dot, w_dot=w_dot)


DisturbanceSource = Callable[[float, RigidBodyState], Disturbance]


def integrate(state: RigidBodyState, f: float, u: ArrayLike, p: QuadParams, dt: float, t: float = 0.0,
              disturbance: DisturbanceSource | None = None) -> RigidBodyState:
    """Advance one step with the wrench ``(f, u)`` held constant.

    Classical RK4 on ``(x, v, w)``; stage attitudes are obtained with the
    exponential map and the final attitude is ``R exp(dt * w_avg)`` with the
    RK4-weighted angular velocity.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    u = np.asarray(u, dtype=float)
    x0, v0, R0, w0 = state.x, state.v, state.R, state.w

    def stage(ts, x, v, R, w):
        dist = NO_DISTURBANCE if disturbance is None else disturbance(ts, RigidBodyState(x, v, R, w))
        a, alpha = _accelerations(R, w, f, u, dist, p)
        return v, a, w, alpha

    k1 = stage(t, x0, v0, R0, w0)
    h = 0.5 * dt
    k2 = stage(t + h, x0 + h * k1[0], v0 + h * k1[1], R0 @ exp_so3(h * k1[2]), w0 + h * k1[3])
    k3 = stage(t + h, x0 + h * k2[0], v0 + h * k2[1], R0 @ exp_so3(h * k2[2]), w0 + h * k2[3])
    k4 = stage(t + dt, x0 + dt * k3[0], v0 + dt * k3[1], R0 @ exp_so3(dt * k3[2]), w0 + dt * k3[3])

    def comb(i):
        return (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0

    R1 = R0 @ exp_so3(dt * comb(2))
    if orthonormality_residual(R1) > REPROJECT_TOL:
        R1 = project_so3(R1)
    return RigidBodyState(x=x0 + dt * comb(0), v=v0 + dt * comb(1), R=R1, w=w0 + dt * comb(3))


def step(state: RigidBodyState, t: float, controller, p: QuadParams, dt: float,
         disturbance: DisturbanceSource | None = None, limit: bool = True):
    """One closed-loop step under zero-order hold.

    ``controller(t, state)`` returns either ``(f, u)`` or an object with
    ``f`` and ``u`` attributes.  Returns ``(next_state, ControlOutput)``; the
    applied (possibly saturated) wrench drives the plant.
    """
    cmd = controller(t, state)
    f, u = (cmd.f, cmd.u) if hasattr(cmd, "f") else cmd
    out = apply_actuators(f, u, p, limit=limit)
    return integrate(state, out.f, out.u, p, dt, t=t, disturbance=disturbance), out


def with_params(p: QuadParams, **changes) -> QuadParams:
    return replace(p, **changes)
