"""Rotation utilities: 6D representation, Gram-Schmidt reconstruction, Euler."""

import numpy as np

from ereact.skeleton import ValidationError

_ORTHO_TOL = 1e-5
_DEGENERATE_TOL = 1e-8


def rot6d_from_matrix(R):
    """First two columns of a rotation matrix, concatenated to a 6-vector.

    Accepts (..., 3, 3); returns (..., 6). Input must be orthonormal with
    det +1 within 1e-5.
    """
    R = np.asarray(R, dtype=np.float64)
    if R.shape[-2:] != (3, 3):
        raise ValidationError(f"expected (..., 3, 3) rotation matrices, got {R.shape}")
    if R.size == 0:
        return np.zeros(R.shape[:-2] + (6,))
    err = np.abs(R @ np.swapaxes(R, -1, -2) - np.eye(3)).max()
    det_err = np.abs(np.linalg.det(R) - 1.0).max()
    if err > _ORTHO_TOL or det_err > _ORTHO_TOL:
        raise ValidationError(
            f"matrix is not a proper rotation (orthonormality error {err:.2e}, "
            f"det error {det_err:.2e}, tolerance {_ORTHO_TOL})"
        )
    return np.concatenate([R[..., :, 0], R[..., :, 1]], axis=-1)


def rot6d_to_matrix(d):
    """Gram-Schmidt reconstruction of a rotation matrix from a 6-vector.

    First column: normalized d[:3]. Second: d[3:] orthogonalized against the
    first and normalized. Third: cross product. Accepts (..., 6).
    """
    d = np.asarray(d, dtype=np.float64)
    if d.shape[-1] != 6:
        raise ValidationError(f"expected (..., 6) vectors, got {d.shape}")
    if d.size == 0:
        return np.zeros(d.shape[:-1] + (3, 3))
    a, b = d[..., :3], d[..., 3:]
    na = np.linalg.norm(a, axis=-1, keepdims=True)
    if (na <= _DEGENERATE_TOL).any():
        raise ValidationError("degenerate 6D rotation: first column has near-zero norm")
    x = a / na
    b_orth = b - np.sum(x * b, axis=-1, keepdims=True) * x
    nb = np.linalg.norm(b_orth, axis=-1, keepdims=True)
    if (nb <= _DEGENERATE_TOL).any():
        raise ValidationError(
            "degenerate 6D rotation: second column is parallel to the first"
        )
    y = b_orth / nb
    z = np.cross(x, y)
    return np.stack([x, y, z], axis=-1)


def euler_zyx_from_matrix(R):
    """ZYX intrinsic Euler angles (radians) such that R = Rz @ Ry @ Rx.

    Accepts (..., 3, 3); returns (..., 3) as (z, y, x) angles. Used by the
    BVH exporter.
    """
    R = np.asarray(R, dtype=np.float64)
    sy = -R[..., 2, 0]
    sy = np.clip(sy, -1.0, 1.0)
    y = np.arcsin(sy)
    cy = np.cos(y)
    near_gimbal = np.abs(cy) < 1e-8
    z = np.where(
        near_gimbal,
        np.arctan2(-R[..., 0, 1], R[..., 1, 1]),
        np.arctan2(R[..., 1, 0], R[..., 0, 0]),
    )
    x = np.where(near_gimbal, 0.0, np.arctan2(R[..., 2, 1], R[..., 2, 2]))
    return np.stack([z, y, x], axis=-1)


def matrix_from_euler_zyx(angles):
    """Inverse of euler_zyx_from_matrix; angles (..., 3) as (z, y, x)."""
    angles = np.asarray(angles, dtype=np.float64)
    z, y, x = angles[..., 0], angles[..., 1], angles[..., 2]
    cz, sz = np.cos(z), np.sin(z)
    cy, sy = np.cos(y), np.sin(y)
    cx, sx = np.cos(x), np.sin(x)
    R = np.empty(angles.shape[:-1] + (3, 3))
    R[..., 0, 0] = cz * cy
    R[..., 0, 1] = cz * sy * sx - sz * cx
    R[..., 0, 2] = cz * sy * cx + sz * sx
    R[..., 1, 0] = sz * cy
    R[..., 1, 1] = sz * sy * sx + cz * cx
    R[..., 1, 2] = sz * sy * cx - cz * sx
    R[..., 2, 0] = -sy
    R[..., 2, 1] = cy * sx
    R[..., 2, 2] = cy * cx
    return R


def axis_angle_matrix(axis, angle):
    """Rodrigues formula; axis (3,) need not be normalized, angle in radians."""
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n <= _DEGENERATE_TOL:
        raise ValidationError("axis has near-zero norm")
    x, y, z = axis / n
    c, s = np.cos(angle), np.sin(angle)
    C = 1.0 - c
    return np.array(
        [
            [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
            [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
            [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
        ]
    )


def random_rotations(count, rng):
    """Uniformly distributed random rotation matrices, shape (count, 3, 3)."""
    # QR of a Gaussian matrix with sign-fixed diagonal gives Haar rotations.
    A = rng.standard_normal((count, 3, 3))
    Q, R = np.linalg.qr(A)
    sign = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    sign[sign == 0] = 1.0
    Q = Q * sign[:, None, :]
    det = np.linalg.det(Q)
    Q[det < 0, :, 2] *= -1.0
    return Q
