"""Attitude tracking errors on SO(3) and their transport quantities.

Two error sets are supported.  ``SET_ONE`` uses the trace error
``psi = 1/2 tr(I - Rd^T R)`` (equal to ``1 - cos(angle)``) and ``SET_TWO``
uses ``psi = 2 - sqrt(1 + tr(Rd^T R))`` (equal to ``2 - 2 cos(angle / 2)``),
whose error vector keeps its magnitude near the antipodal attitude.

``psi`` is evaluated through ``||Rd^T R - I||_F^2 / 4``, which equals the
trace form on SO(3) but keeps full relative precision for small errors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .errors import AntipodalError
from .so3 import Mat3, Vec3, hat

ANTIPODAL_TOL = 1e-12


class ErrorSetKind(enum.Enum):
    SET_ONE = "one"
    SET_TWO = "two"

    @classmethod
    def parse(cls, value: "str | ErrorSetKind") -> "ErrorSetKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"1": cls.SET_ONE, "one": cls.SET_ONE, "set_one": cls.SET_ONE,
                   "2": cls.SET_TWO, "two": cls.SET_TWO, "set_two": cls.SET_TWO}
        if key not in aliases:
            raise ValueError(f"unknown error set {value!r}; expected 'one' or 'two'")
        return aliases[key]


@dataclass(frozen=True)
class AttitudeError:
    psi: float
    e_R: Vec3
    e_omega: Vec3
    kind: ErrorSetKind


def _relative(R: ArrayLike, Rd: ArrayLike) -> Mat3:
    return np.asarray(Rd, dtype=float).T @ np.asarray(R, dtype=float)


def _psi_one(Q: Mat3) -> float:
    D = Q - np.eye(3)
    return 0.25 * float(np.sum(D * D))


def _skew_part(Q: Mat3) -> Vec3:
    return 0.5 * np.array([Q[2, 1] - Q[1, 2], Q[0, 2] - Q[2, 0], Q[1, 0] - Q[0, 1]])


def _one_plus_trace(psi1: float) -> float:
    # 1 + tr(Q) == 4 - 2 psi1 on SO(3)
    return 4.0 - 2.0 * psi1


def _antipodal_check(opt: float) -> None:
    if opt <= ANTIPODAL_TOL:
        raise AntipodalError(
            f"second error set undefined at antipodal attitude (1 + tr = {opt:.3e})"
        )


def psi_of(R: ArrayLike, Rd: ArrayLike, kind: ErrorSetKind = ErrorSetKind.SET_ONE) -> float:
    """Attitude error function, in ``[0, 2]``."""
    psi1 = _psi_one(_relative(R, Rd))
    if kind is ErrorSetKind.SET_ONE:
        return min(psi1, 2.0)
    opt = _one_plus_trace(psi1)
    _antipodal_check(opt)
    # 2 - sqrt(opt) rewritten without cancellation
    return 2.0 * psi1 / (2.0 + np.sqrt(opt))


def e_R_of(R: ArrayLike, Rd: ArrayLike, kind: ErrorSetKind = ErrorSetKind.SET_ONE) -> Vec3:
    """Attitude error vector (left-trivialized gradient of ``psi``)."""
    Q = _relative(R, Rd)
    e = _skew_part(Q)
    if kind is ErrorSetKind.SET_ONE:
        return e
    opt = _one_plus_trace(_psi_one(Q))
    _antipodal_check(opt)
    return e / np.sqrt(opt)


def e_omega_of(R: ArrayLike, w: ArrayLike, Rd: ArrayLike, wd: ArrayLike) -> Vec3:
    """Angular velocity error ``w - R^T Rd wd``."""
    R = np.asarray(R, dtype=float)
    return np.asarray(w, dtype=float) - R.T @ (np.asarray(Rd, dtype=float) @ np.asarray(wd, dtype=float))


def transport_matrix(R: ArrayLike, Rd: ArrayLike, kind: ErrorSetKind = ErrorSetKind.SET_ONE) -> Mat3:
    """Matrix ``E`` with ``d/dt e_R = E @ e_omega``."""
    Qt = _relative(R, Rd).T
    E = 0.5 * (np.trace(Qt) * np.eye(3) - Qt)
    if kind is ErrorSetKind.SET_ONE:
        return E
    Q = Qt.T
    opt = _one_plus_trace(_psi_one(Q))
    _antipodal_check(opt)
    e = _skew_part(Q) / np.sqrt(opt)
    return (E + np.outer(e, e)) / np.sqrt(opt)


def a_d_of(R: ArrayLike, w: ArrayLike, Rd: ArrayLike, wd: ArrayLike, wd_dot: ArrayLike) -> Vec3:
    """Feed-forward term of the angular velocity error derivative.

    ``d/dt e_omega = d/dt w + a_d`` with
    ``a_d = hat(w) R^T Rd wd - R^T Rd wd_dot``.
    """
    Qt = np.asarray(R, dtype=float).T @ np.asarray(Rd, dtype=float)
    return hat(w) @ (Qt @ np.asarray(wd, dtype=float)) - Qt @ np.asarray(wd_dot, dtype=float)


def attitude_error(R, w, Rd, wd, kind: ErrorSetKind = ErrorSetKind.SET_ONE) -> AttitudeError:
    return AttitudeError(
        psi=psi_of(R, Rd, kind),
        e_R=e_R_of(R, Rd, kind),
        e_omega=e_omega_of(R, w, Rd, wd),
        kind=kind,
    )
