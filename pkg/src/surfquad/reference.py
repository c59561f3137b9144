"""Reference trajectories and multi-phase flight scenarios."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import IllConditionedError
from .so3 import Mat3, Vec3, exp_so3

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

_ZERO = np.zeros(3)
_ZERO.flags.writeable = False
_EYE = np.eye(3)
_EYE.flags.writeable = False

DEGREE = 8
MAX_ORDER = 4


@dataclass(frozen=True)
class ReferenceSignal:
    """Desired pose and derivatives at one instant.

    ``acc`` and ``jerk`` are the desired translational acceleration and its derivative; ``omega``/``omega_dot``
    are the desired body angular velocity and its derivative; ``heading`` is
    the desired direction of the first body axis.
    """

    x: Vec3 = _ZERO
    v: Vec3 = _ZERO
    acc: Vec3 = _ZERO
    jerk: Vec3 = _ZERO
    R: Mat3 = _EYE
    omega: Vec3 = _ZERO
    omega_dot: Vec3 = _ZERO
    heading: Vec3 = E1


class Trajectory(Protocol):
    def sample(self, t: float) -> ReferenceSignal: ...


# -- eighth-degree polynomial segments --------------------------------------

# _DERIV[k, j] = j! / (j - k)!  for j >= k, else 0
_DERIV = np.array([[math.perm(j, k) for j in range(DEGREE + 1)] for k in range(MAX_ORDER + 1)], dtype=float)
_EXPONENT = np.maximum(np.arange(DEGREE + 1)[None, :] - np.arange(MAX_ORDER + 1)[:, None], 0)


@dataclass(frozen=True)
class Sp8Segment:
    """Degree-8 polynomial on ``[t0, t1]`` in normalized time ``s = (t - t0) / (t1 - t0)``.

    ``coeffs`` has shape ``(9, n)`` (one column per axis).  Evaluation
    outside the interval extrapolates the polynomial.
    """

    coeffs: np.ndarray
    t0: float
    t1: float

    @property
    def duration(self) -> float:
        return self.t1 - self.t0

    @property
    def n_axes(self) -> int:
        return self.coeffs.shape[1]

    def derivatives(self, t: float, max_order: int = MAX_ORDER) -> np.ndarray:
        """Rows ``0..max_order`` of value and time derivatives at ``t``, shape ``(max_order + 1, n)``."""
        T = self.duration
        s = (t - self.t0) / T
        k = max_order + 1
        W = _DERIV[:k] * s ** _EXPONENT[:k] / T ** np.arange(k)[:, None]
        return W @ self.coeffs

    def __call__(self, t: float, order: int = 0) -> np.ndarray:
        return self.derivatives(t, order)[order]

    def shifted(self, dt: float) -> "Sp8Segment":
        return Sp8Segment(self.coeffs, self.t0 + dt, self.t1 + dt)


def _as_bc(bc: ArrayLike, rows: int) -> np.ndarray:
    a = np.asarray(bc, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.shape[0] < rows:
        a = np.vstack([a, np.zeros((rows - a.shape[0], a.shape[1]))])
    return a[:rows]


def sp8_fit(bc0: ArrayLike, bc1: ArrayLike, t0: float, t1: float, split: tuple[int, int] = (5, 4)) -> Sp8Segment:
    """Fit the unique degree-8 polynomial to boundary conditions.

    ``bc0``/``bc1`` list value, then first, second, ... derivatives (one row
    per order, one column per axis; a 1-D input is a single axis).  With the
    default ``split=(5, 4)`` the value and derivatives 1-4 are imposed at
    ``t0`` and the value and derivatives 1-3 at ``t1``; unused trailing rows
    are ignored and missing rows are taken as zero.
    """
    if not t1 > t0:
        raise ValueError("t1 must be greater than t0")
    n0, n1 = split
    if n0 + n1 != DEGREE + 1 or min(n0, n1) < 1 or max(n0, n1) > MAX_ORDER + 1:
        raise ValueError(f"invalid boundary split {split}")
    b0, b1 = _as_bc(bc0, n0), _as_bc(bc1, n1)
    if b0.shape[1] != b1.shape[1]:
        raise ValueError("boundary conditions must have the same number of axes")
    T = t1 - t0
    A = np.zeros((DEGREE + 1, DEGREE + 1))
    rhs = np.zeros((DEGREE + 1, b0.shape[1]))
    for k in range(n0):
        A[k, k] = _DERIV[k, k]
        rhs[k] = b0[k] * T**k
    for k in range(n1):
        A[n0 + k] = _DERIV[k]
        rhs[n0 + k] = b1[k] * T**k
    coeffs = np.linalg.solve(A, rhs)
    resid = np.max(np.abs(A @ coeffs - rhs)) if rhs.size else 0.0
    if resid > 1e-6 * max(1.0, float(np.max(np.abs(rhs)))):
        raise IllConditionedError(f"polynomial fit residual {resid:.3e}")
    return Sp8Segment(coeffs=coeffs, t0=float(t0), t1=float(t1))


# -- trajectories -----------------------------------------------------------


@dataclass(frozen=True)
class StaticReference:
    """Constant set point (used for step commands)."""

    x: Vec3 = _ZERO
    R: Mat3 = _EYE
    heading: Vec3 = E1

    def sample(self, t: float) -> ReferenceSignal:
        return ReferenceSignal(x=np.asarray(self.x, float), R=np.asarray(self.R, float),
                               heading=np.asarray(self.heading, float))


@dataclass(frozen=True)
class PolynomialReference:
    """Position reference from a three-axis polynomial segment."""

    segment: Sp8Segment
    heading: Vec3 = E1

    def sample(self, t: float) -> ReferenceSignal:
        d = self.segment.derivatives(t, 3)
        return ReferenceSignal(x=d[0], v=d[1], acc=d[2], jerk=d[3], heading=np.asarray(self.heading, float))


@dataclass(frozen=True)
class FunctionReference:
    """Position reference from a callable returning ``(x, v, acc)`` or ``(x, v, acc, jerk)``."""

    fn: Callable[[float], tuple]
    heading: Vec3 = E1

    def sample(self, t: float) -> ReferenceSignal:
        out = [np.asarray(c, float) for c in self.fn(t)]
        jerk = out[3] if len(out) > 3 else _ZERO
        return ReferenceSignal(x=out[0], v=out[1], acc=out[2], jerk=jerk, heading=np.asarray(self.heading, float))


@dataclass(frozen=True)
class PitchReference:
    """Attitude ``base @ Ry(theta(t))`` for a scalar pitch profile."""

    profile: Sp8Segment
    base: Mat3 = _EYE

    def sample(self, t: float) -> ReferenceSignal:
        th, th_dot, th_ddot = self.profile.derivatives(t, 2)[:, 0]
        return ReferenceSignal(R=np.asarray(self.base, float) @ exp_so3(th * E2),
                               omega=th_dot * E2, omega_dot=th_ddot * E2)


def attitude_ref_from_pitch(profile: Sp8Segment, base: ArrayLike | None = None) -> PitchReference:
    return PitchReference(profile=profile, base=_EYE if base is None else np.asarray(base, float))


def bound_B(ref: Trajectory, t0: float, t1: float, m: float, g: float, dt: float = 1e-3,
            safety: float = 1.01) -> float:
    """Upper bound on ``||m g E3 + m acc_d(t)||`` over ``[t0, t1]`` from a dense grid."""
    n = max(int(round((t1 - t0) / dt)), 1)
    best = 0.0
    for t in np.linspace(t0, t1, n + 1):
        best = max(best, float(np.linalg.norm(m * g * E3 + m * ref.sample(t).acc)))
    return safety * best


# -- scenarios --------------------------------------------------------------


class Mode(enum.Enum):
    ATTITUDE = "attitude"
    POSITION = "position"


@dataclass(frozen=True)
class Handoff:
    """Vehicle state at a phase start with the translational acceleration and jerk it implies."""

    state: object
    acc: Vec3 = _ZERO
    jerk: Vec3 = _ZERO


# (handoff at phase start, t_start, t_end) -> trajectory
ReferenceFactory = Callable[[Handoff, float, float], Trajectory]


@dataclass(frozen=True)
class Phase:
    t_end: float
    mode: Mode
    reference: ReferenceFactory
    label: str = ""


@dataclass(frozen=True)
class FlightScenario:
    """Contiguous phases starting at ``t0``; phase ``i`` covers ``[start_i, t_end_i)``."""

    phases: tuple[Phase, ...]
    t0: float = 0.0
    name: str = ""

    def __post_init__(self):
        if not self.phases:
            raise ValueError("scenario needs at least one phase")
        prev = self.t0
        for ph in self.phases:
            if not ph.t_end > prev:
                raise ValueError("phase end times must be strictly increasing")
            prev = ph.t_end

    @property
    def boundaries(self) -> list[float]:
        return [self.t0] + [ph.t_end for ph in self.phases]

    @property
    def horizon(self) -> float:
        return self.phases[-1].t_end

    def phase_index(self, t: float) -> int:
        for i, ph in enumerate(self.phases):
            if t < ph.t_end:
                return i
        return len(self.phases) - 1


def position_sp8(target: ArrayLike, target_velocity: ArrayLike = (0.0, 0.0, 0.0),
                 heading: ArrayLike = E1) -> ReferenceFactory:
    """Smooth transfer from the handoff state to ``target``.

    The start matches the handoff position, velocity, acceleration and jerk
    (snap zero); the end has zero acceleration and jerk.
    """
    target = np.asarray(target, float)
    target_velocity = np.asarray(target_velocity, float)
    heading = np.asarray(heading, float)

    def make(h: Handoff, t0, t1):
        bc0 = np.vstack([h.state.x, h.state.v, h.acc, h.jerk, np.zeros(3)])
        bc1 = np.vstack([target, target_velocity, np.zeros((2, 3))])
        return PolynomialReference(sp8_fit(bc0, bc1, t0, t1), heading=heading)

    return make


def position_hold(target: ArrayLike, heading: ArrayLike = E1) -> ReferenceFactory:
    ref = StaticReference(x=np.asarray(target, float), heading=np.asarray(heading, float))
    return lambda h, t0, t1: ref


def pitch_sp8(angle: float) -> ReferenceFactory:
    """Smooth pitch rotation by ``angle`` relative to the handoff attitude."""

    def make(h: Handoff, t0, t1):
        return attitude_ref_from_pitch(sp8_fit([0.0], [angle], t0, t1), base=h.state.R)

    return make


def attitude_step(R: ArrayLike) -> ReferenceFactory:
    ref = StaticReference(R=np.asarray(R, float))
    return lambda h, t0, t1: ref


def aggressive_scenario() -> FlightScenario:
    """Aggressive recovery manoeuvre: climb, flip, recover, translate."""
    return FlightScenario(
        phases=(
            Phase(4.0, Mode.POSITION, position_sp8([0.0, 1.0, 10.0], [0.0, 0.0, 7.0], E1), "climb"),
            Phase(4.4, Mode.ATTITUDE, pitch_sp8(np.pi), "flip"),
            Phase(4.9, Mode.ATTITUDE, attitude_step(np.eye(3)), "recover"),
            Phase(10.0, Mode.POSITION, position_sp8([-1.0, 1.5, 10.0], [0.0, 0.0, 0.0], E1), "translate"),
        ),
        name="aggressive",
    )
