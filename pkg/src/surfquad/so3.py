"""Rotation-group primitives.

Vectors are plain ``(3,)`` float arrays and rotations plain ``(3, 3)`` arrays;
no wrapper types are imposed on callers.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import AsymmetryError, SingularError

Vec3 = NDArray[np.float64]
Mat3 = NDArray[np.float64]

ORTHONORMAL_TOL = 1e-9
_SMALL_ANGLE = 1e-8


def hat(r: ArrayLike) -> Mat3:
    """Cross-product matrix: ``hat(r) @ w == np.cross(r, w)``."""
    r1, r2, r3 = np.asarray(r, dtype=float)
    return np.array([[0.0, -r3, r2], [r3, 0.0, -r1], [-r2, r1, 0.0]])


def cross(a: Vec3, b: Vec3) -> Vec3:
    """Cross product of two 3-vectors (much cheaper than ``np.cross`` for single vectors)."""
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def vee(M: ArrayLike, tol: float = 1e-6) -> Vec3:
    """Inverse of :func:`hat`, applied to the skew part of ``M``.

    Raises :class:`AsymmetryError` when the symmetric part of ``M`` is larger
    than ``tol`` relative to ``||M||_F``.
    """
    M = np.asarray(M, dtype=float)
    scale = np.linalg.norm(M)
    if scale > 0.0 and np.linalg.norm(M + M.T) > tol * scale:
        raise AsymmetryError(
            f"matrix is not skew-symmetric: ||M + M^T|| = {np.linalg.norm(M + M.T):.3e}"
        )
    return 0.5 * np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]])


def exp_so3(w: ArrayLike) -> Mat3:
    """Rodrigues exponential of the rotation vector ``w``."""
    w = np.asarray(w, dtype=float)
    theta = float(np.sqrt(w @ w))
    W = hat(w)
    if theta < _SMALL_ANGLE:
        return np.eye(3) + W + 0.5 * (W @ W)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / (theta * theta)
    return np.eye(3) + a * W + b * (W @ W)


def orthonormality_residual(R: ArrayLike) -> float:
    R = np.asarray(R, dtype=float)
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


def is_rotation(R: ArrayLike, tol: float = ORTHONORMAL_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    return R.shape == (3, 3) and orthonormality_residual(R) <= tol and np.linalg.det(R) > 0.0


def project_so3(M: ArrayLike) -> Mat3:
    """Nearest rotation to ``M`` in the Frobenius sense (polar factor)."""
    M = np.asarray(M, dtype=float)
    if np.linalg.det(M) <= 1e-12:
        raise SingularError(f"cannot project matrix with det={np.linalg.det(M):.3e} onto SO(3)")
    U, _, Vt = np.linalg.svd(M)
    return U @ Vt


def random_rotation(rng: np.random.Generator) -> Mat3:
    """Rotation about a uniformly random axis by an angle uniform in ``[0, pi)``."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return exp_so3(rng.uniform(0.0, np.pi) * axis)


def rot_axis(axis: int, angle: float) -> Mat3:
    """Rotation by ``angle`` about body axis ``axis`` (0, 1 or 2)."""
    w = np.zeros(3)
    w[axis] = angle
    return exp_so3(w)
