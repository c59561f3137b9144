"""Telemetry container and evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, RangeError

GRID_RTOL = 1e-9


@dataclass
class Telemetry:
    """Uniform-grid simulation record.  Row ``k`` holds the state at ``t[k]``
    and the wrench applied over ``[t[k], t[k] + dt)``.

    Position errors are NaN where the attitude mode was active.
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    R: np.ndarray
    w: np.ndarray
    mode: np.ndarray
    phase: np.ndarray
    psi: np.ndarray
    e_R: np.ndarray
    e_omega: np.ndarray
    e_x: np.ndarray
    e_v: np.ndarray
    f: np.ndarray
    u: np.ndarray
    f_cmd: np.ndarray
    u_cmd: np.ndarray
    F: np.ndarray
    saturated: np.ndarray
    s_R: np.ndarray
    s_x: np.ndarray
    failure: str | None = None
    failure_time: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.t)
        for name in ("x", "v", "R", "w", "mode", "phase", "psi", "e_R", "e_omega", "e_x", "e_v", "f", "u",
                     "f_cmd", "u_cmd", "F", "saturated", "s_R", "s_x"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"telemetry field {name!r} has length {len(getattr(self, name))}, expected {n}")
        if n > 1:
            d = np.diff(self.t)
            if np.any(d <= 0) or np.ptp(d) > GRID_RTOL * max(abs(d[0]), 1.0) * 10:
                raise ValueError("telemetry times must be strictly increasing with constant step")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else float("nan")

    def norm(self, name: str) -> np.ndarray:
        return np.linalg.norm(getattr(self, name), axis=1)

    def slice(self, mask: np.ndarray) -> "Telemetry":
        kw = {name: getattr(self, name)[mask] for name in self.__dataclass_fields__
              if name not in ("failure", "failure_time", "meta")}
        return Telemetry(**kw, failure=self.failure, failure_time=self.failure_time, meta=dict(self.meta))


def _index_of(tel: Telemetry, t: float) -> int:
    if len(tel) < 2:
        raise RangeError("telemetry too short")
    k = (t - tel.t[0]) / tel.dt
    kr = int(round(k))
    if t <= tel.t[0] or kr >= len(tel) or abs(k - kr) > 1e-6:
        raise RangeError(f"t={t} is not a grid point in ({tel.t[0]}, {tel.t[-1]}]")
    return kr


def f_rms_series(tel: Telemetry) -> np.ndarray:
    """RMS of the motor thrusts from the start to each sample (NaN at the first).

    Trapezoidal rule on the uniform grid; the step size cancels between the
    integral and the elapsed time.  The motor sum is paired and the running
    integral accumulates deviations from the first sample, so a constant
    thrust ``c`` on every motor gives exactly ``2 c``.
    """
    F2 = np.asarray(tel.F, float) ** 2
    y = (F2[:, 0] + F2[:, 1]) + (F2[:, 2] + F2[:, 3])
    dy = y - y[0]
    c = np.cumsum(dy)
    k = np.arange(len(y))
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_sq = y[0] + (c - 0.5 * dy) / k
    mean_sq[0] = np.nan
    return np.sqrt(mean_sq)


def f_rms(tel: Telemetry, t: float) -> float:
    """RMS of the motor thrusts over ``[t0, t]``; ``t`` must be a grid point after ``t0``."""
    return float(f_rms_series(tel)[_index_of(tel, t)])


def _check_grids(a: Telemetry, b: Telemetry) -> None:
    if len(a) != len(b) or not np.allclose(a.t, b.t, rtol=0, atol=GRID_RTOL):
        raise GridMismatchError("telemetries are not on the same time grid")


def delta_f_rms_series(proposed: Telemetry, benchmark: Telemetry) -> np.ndarray:
    _check_grids(proposed, benchmark)
    return f_rms_series(proposed) - f_rms_series(benchmark)


def delta_f_rms(proposed: Telemetry, benchmark: Telemetry, t: float) -> float:
    """``f_rms(proposed, t) - f_rms(benchmark, t)``."""
    _check_grids(proposed, benchmark)
    return f_rms(proposed, t) - f_rms(benchmark, t)


def reaching_time(t: np.ndarray, s_norm: np.ndarray, eps: float | None = None, window: float = 0.2,
                  rel_eps: float = 0.01) -> float | None:
    """First time the surface norm reaches ``eps`` and stays within ``2 eps`` for ``window`` seconds.

    ``eps`` defaults to ``rel_eps`` times the initial norm.  Returns ``None``
    when the surface is never reached.  A window running past the end of the
    record is checked over the samples available.
    """
    t = np.asarray(t, float)
    s = np.asarray(s_norm, float)
    if eps is None:
        eps = rel_eps * s[0]
    if eps <= 0:
        if np.all(s == 0):
            return float(t[0])
        raise ValueError("eps must be positive")
    below = np.flatnonzero(s <= eps)
    for k in below:
        end = np.searchsorted(t, t[k] + window, side="right")
        if np.all(s[k:end] <= 2 * eps):
            return float(t[k])
    return None
