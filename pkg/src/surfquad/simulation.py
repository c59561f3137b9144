"""Fixed-step closed-loop simulation of multi-phase flight scenarios."""

from __future__ import annotations

import logging
from typing import Callable, Mapping

import numpy as np

from .control_laws import AttitudeController, Command, PositionController
from .errors import SurfquadError
from .metrics import Telemetry
from .plant import (
    QuadParams,
    RigidBodyState,
    WindModel,
    apply_actuators,
    integrate,
    wind_disturbance,
)
from .reference import FlightScenario, Handoff, Mode, Phase
from .so3 import cross

log = logging.getLogger(__name__)

Controller = Callable[[float, RigidBodyState, object], object]


def _gains_of(ctrl):
    g = getattr(ctrl, "gains", None)
    if g is None:
        return None, None
    att = getattr(g, "att", g)
    return att, (g if hasattr(g, "k_x") else None)


def _handoff(state: RigidBodyState, thrust: float, params: QuadParams) -> Handoff:
    """Acceleration and jerk produced by ``thrust`` along the body axis, thrust held constant."""
    b3 = state.R[:, 2]
    acc = thrust / params.m * b3 - params.g * np.array([0.0, 0.0, 1.0])
    jerk = thrust / params.m * (state.R @ cross(state.w, np.array([0.0, 0.0, 1.0])))
    return Handoff(state, acc, jerk)


def simulate(scenario: FlightScenario, controllers: Mapping[Mode, Controller], params: QuadParams,
             initial: RigidBodyState, dt: float = 1e-3, horizon: float | None = None,
             wind: WindModel | None = None, limit: bool = False, raise_on_error: bool = False) -> Telemetry:
    """Run ``scenario`` from ``initial`` and return the telemetry.

    Each phase's reference is built from the state at the moment the phase
    starts.  Controller failures stop the run; the telemetry then ends at
    the last completed sample and carries ``failure``/``failure_time``
    (unless ``raise_on_error``).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    t0 = scenario.t0
    horizon = scenario.horizon if horizon is None else horizon
    n = int(round((horizon - t0) / dt))
    if n < 1:
        raise ValueError("horizon must exceed the scenario start by at least one step")
    bounds = [int(round((ph.t_end - t0) / dt)) for ph in scenario.phases]
    starts = [0] + bounds[:-1]
    dist = None if wind is None else (lambda t, s: wind_disturbance(s, wind, t))

    N = n + 1
    rec = {
        "t": np.empty(N), "x": np.empty((N, 3)), "v": np.empty((N, 3)), "R": np.empty((N, 3, 3)),
        "w": np.empty((N, 3)), "mode": np.zeros(N, dtype=int), "phase": np.zeros(N, dtype=int),
        "psi": np.full(N, np.nan), "e_R": np.full((N, 3), np.nan), "e_omega": np.full((N, 3), np.nan),
        "e_x": np.full((N, 3), np.nan), "e_v": np.full((N, 3), np.nan), "f": np.empty(N),
        "u": np.empty((N, 3)), "f_cmd": np.empty(N), "u_cmd": np.empty((N, 3)), "F": np.empty((N, 4)),
        "saturated": np.zeros((N, 4), dtype=bool), "s_R": np.full((N, 3), np.nan), "s_x": np.full((N, 3), np.nan),
    }
    state = initial
    phase_idx = -1
    traj = ctrl = None
    att_g = pos_g = None
    failure = failure_time = None
    last = -1
    last_f = params.hover_thrust
    phase_starts_state = []
    for k in range(N):
        t = t0 + k * dt
        target = next((i for i, b in enumerate(bounds) if k < b), len(bounds) - 1)
        if target != phase_idx:
            phase_idx = target
            ph: Phase = scenario.phases[phase_idx]
            t_start = t0 + starts[phase_idx] * dt
            traj = ph.reference(_handoff(state, last_f, params), t_start, ph.t_end)
            ctrl = controllers[ph.mode]
            att_g, pos_g = _gains_of(ctrl)
            phase_starts_state.append(state)
            log.debug("phase %d (%s) starts at t=%.4f", phase_idx, ph.label or ph.mode.value, t_start)
        ph = scenario.phases[phase_idx]
        try:
            cmd = ctrl(t, state, traj)
        except SurfquadError as exc:
            if raise_on_error:
                raise
            failure, failure_time = f"{type(exc).__name__}: {exc}", t
            log.warning("controller failed at t=%.4f: %s", t, exc)
            break
        f, u = (cmd.f, cmd.u) if hasattr(cmd, "f") else cmd
        out = apply_actuators(f, u, params, limit=limit)

        rec["t"][k] = t
        rec["x"][k], rec["v"][k], rec["R"][k], rec["w"][k] = state.x, state.v, state.R, state.w
        rec["mode"][k] = 1 if ph.mode is Mode.POSITION else 0
        rec["phase"][k] = phase_idx
        rec["f"][k], rec["u"][k], rec["F"][k], rec["saturated"][k] = out.f, out.u, out.F, out.saturated
        rec["f_cmd"][k], rec["u_cmd"][k] = out.f_cmd, out.u_cmd
        if isinstance(cmd, Command):
            rec["psi"][k] = cmd.psi
            if cmd.e_R is not None:
                rec["e_R"][k], rec["e_omega"][k] = cmd.e_R, cmd.e_omega
                if att_g is not None:
                    rec["s_R"][k] = att_g.k_R * cmd.e_R + att_g.k_omega * cmd.e_omega
            if cmd.e_x is not None:
                rec["e_x"][k], rec["e_v"][k] = cmd.e_x, cmd.e_v
                if pos_g is not None:
                    rec["s_x"][k] = pos_g.k_x * cmd.e_x + pos_g.k_v * cmd.e_v
        last = k
        last_f = out.f
        if k < n:
            state = integrate(state, out.f, out.u, params, dt, t=t, disturbance=dist)

    m = last + 1
    tel = Telemetry(**{key: val[:m] for key, val in rec.items()}, failure=failure, failure_time=failure_time)
    tel.meta.update(scenario=scenario.name, dt=dt, horizon=horizon, phase_start_states=phase_starts_state,
                    boundaries=scenario.boundaries)
    return tel


def standard_controllers(params: QuadParams, attitude_gains, position_gains, kind,
                         attitude_thrust: float | None = None) -> dict[Mode, Controller]:
    return {
        Mode.ATTITUDE: AttitudeController(attitude_gains, params, kind, thrust=attitude_thrust),
        Mode.POSITION: PositionController(position_gains, params, kind),
    }
