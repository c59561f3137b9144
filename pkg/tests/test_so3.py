from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from surfquad.errors import AsymmetryError, SingularError
from surfquad.so3 import (
    cross,
    exp_so3,
    hat,
    is_rotation,
    orthonormality_residual,
    project_so3,
    random_rotation,
    rot_axis,
    vee,
)

from .strategies import rotations, vec3


def test_hat_layout():
    np.testing.assert_array_equal(hat([1, 2, 3]), [[0, -3, 2], [3, 0, -1], [-2, 1, 0]])


def test_exp_quarter_turn_about_third_axis():
    np.testing.assert_allclose(exp_so3([0, 0, np.pi / 2]), [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)


def test_exp_zero_is_identity():
    np.testing.assert_array_equal(exp_so3(np.zeros(3)), np.eye(3))


def test_exp_small_angle_branch_is_continuous():
    w = np.array([3e-9, -2e-9, 1e-9])
    below = exp_so3(w)
    above = exp_so3(w * 10)
    np.testing.assert_allclose(below, np.eye(3) + hat(w), atol=1e-16)
    np.testing.assert_allclose(above, np.eye(3) + hat(10 * w), atol=1e-15)


def test_vee_rejects_symmetric_input():
    with pytest.raises(AsymmetryError):
        vee(np.eye(3))


def test_vee_of_zero():
    np.testing.assert_array_equal(vee(np.zeros((3, 3))), np.zeros(3))


def test_project_rejects_singular():
    with pytest.raises(SingularError):
        project_so3(np.diag([1.0, 1.0, 0.0]))
    with pytest.raises(SingularError):
        project_so3(-np.eye(3))


def test_project_recovers_perturbed_rotation(rng):
    R = random_rotation(rng)
    P = project_so3(R + 1e-6 * rng.normal(size=(3, 3)))
    assert is_rotation(P)
    assert np.linalg.norm(P - R) < 1e-5


def test_rot_axis_takes_index():
    np.testing.assert_allclose(rot_axis(1, np.pi / 2) @ [1, 0, 0], [0, 0, -1], atol=1e-15)
    with pytest.raises(IndexError):
        rot_axis(3, 1.0)


def test_random_rotation_is_seeded():
    a = random_rotation(np.random.default_rng(7))
    b = random_rotation(np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)
    assert is_rotation(a)


@given(vec3)
def test_vee_inverts_hat(r):
    np.testing.assert_allclose(vee(hat(r)), r, rtol=0, atol=1e-15)


@given(vec3, vec3)
def test_hat_is_cross_product(a, b):
    np.testing.assert_allclose(hat(a) @ b, np.cross(a, b), atol=1e-12)
    np.testing.assert_allclose(cross(a, b), np.cross(a, b), atol=1e-12)


@given(vec3)
def test_exp_lands_on_so3(w):
    R = exp_so3(w)
    assert orthonormality_residual(R) < 1e-13
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-13)


@given(vec3)
def test_exp_fixes_its_axis_and_inverts_under_negation(w):
    R = exp_so3(w)
    np.testing.assert_allclose(R @ w, w, atol=1e-12)
    np.testing.assert_allclose(R @ exp_so3(-w), np.eye(3), atol=1e-13)


@given(rotations(), vec3)
def test_hat_conjugation(R, r):
    np.testing.assert_allclose(R @ hat(r) @ R.T, hat(R @ r), atol=1e-12)


@given(rotations())
def test_projection_is_idempotent_on_rotations(R):
    np.testing.assert_allclose(project_so3(R), R, atol=1e-13)


@given(st.floats(0.0, 3.1), st.integers(0, 2))
def test_exp_angle_from_trace(angle, axis):
    R = rot_axis(axis, angle)
    assert np.trace(R) == pytest.approx(1 + 2 * np.cos(angle), abs=1e-13)
