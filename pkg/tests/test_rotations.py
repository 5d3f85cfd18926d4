import numpy as np
import pytest

from ereact.rotations import (
    axis_angle_matrix,
    euler_zyx_from_matrix,
    matrix_from_euler_zyx,
    random_rotations,
    rot6d_from_matrix,
    rot6d_to_matrix,
)
from ereact.skeleton import ValidationError


def test_roundtrip_random_rotations():
    rng = np.random.default_rng(0)
    R = random_rotations(1000, rng)
    back = rot6d_to_matrix(rot6d_from_matrix(R))
    assert np.abs(back - R).max() < 1e-6


def test_identity_layout():
    d = rot6d_from_matrix(np.eye(3))
    assert np.allclose(d, [1, 0, 0, 0, 1, 0])


def test_reconstruction_is_orthonormal_from_noisy_input():
    rng = np.random.default_rng(1)
    d = rng.normal(size=(50, 6))
    R = rot6d_to_matrix(d)
    eye = np.einsum("bij,bkj->bik", R, R)
    assert np.abs(eye - np.eye(3)).max() < 1e-10
    assert np.allclose(np.linalg.det(R), 1.0)


def test_from_matrix_rejects_non_rotation():
    with pytest.raises(ValidationError):
        rot6d_from_matrix(np.eye(3) * 2.0)


def test_to_matrix_rejects_degenerate_first_column():
    with pytest.raises(ValidationError, match="first column"):
        rot6d_to_matrix(np.array([0.0, 0, 0, 0, 1, 0]))


def test_to_matrix_rejects_parallel_second_column():
    with pytest.raises(ValidationError, match="second column"):
        rot6d_to_matrix(np.array([1.0, 0, 0, 2.0, 0, 0]))


def test_euler_roundtrip():
    rng = np.random.default_rng(2)
    R = random_rotations(200, rng)
    back = matrix_from_euler_zyx(euler_zyx_from_matrix(R))
    assert np.abs(back - R).max() < 1e-8


def test_euler_composition_order():
    # R = Rz @ Ry @ Rx by construction
    z, y, x = 0.3, -0.7, 1.1
    Rz = axis_angle_matrix([0, 0, 1], z)
    Ry = axis_angle_matrix([0, 1, 0], y)
    Rx = axis_angle_matrix([1, 0, 0], x)
    assert np.allclose(matrix_from_euler_zyx([z, y, x]), Rz @ Ry @ Rx)


def test_axis_angle_quarter_turn():
    R = axis_angle_matrix([0, 0, 1], np.pi / 2)
    assert np.allclose(R @ np.array([1.0, 0, 0]), [0, 1, 0])


def test_axis_angle_rejects_zero_axis():
    with pytest.raises(ValidationError):
        axis_angle_matrix([0, 0, 0], 1.0)


def test_random_rotations_are_proper():
    R = random_rotations(500, np.random.default_rng(3))
    assert np.allclose(np.linalg.det(R), 1.0)
    eye = np.einsum("bij,bkj->bik", R, R)
    assert np.abs(eye - np.eye(3)).max() < 1e-10
