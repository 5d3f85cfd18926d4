"""Motion representation: per-frame features, encoding, FK, foot contacts.

Per frame the feature vector is [j, v, r, f]:
  j: 3N global joint positions (m)
  v: 3N global joint linear velocities (m/s), forward differences
  r: 6(N-1) 6D parent-local rotations of the non-root joints
  f: 4 foot contact flags in [0, 1]
Total dimension D = 12N - 2.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ereact.rotations import rot6d_from_matrix, rot6d_to_matrix
from ereact.skeleton import SkeletonSpec, ValidationError, emotion_index


def feature_slices(n_joints):
    """Slices of the j / v / r / f channels within a D-dim frame vector."""
    n = n_joints
    j_end = 3 * n
    v_end = 6 * n
    r_end = 6 * n + 6 * (n - 1)
    return {
        "j": slice(0, j_end),
        "v": slice(j_end, v_end),
        "r": slice(v_end, r_end),
        "f": slice(r_end, r_end + 4),
    }


@dataclass(frozen=True)
class MotionSequence:
    """L frames of motion features on a fixed skeleton, in world coordinates."""

    frames: np.ndarray  # (L, D) float32
    fps: float
    skeleton: SkeletonSpec

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float32)
        object.__setattr__(self, "frames", frames)
        if frames.ndim != 2:
            raise ValidationError(f"frames must be 2-D, got shape {frames.shape}")
        L, D = frames.shape
        if L < 2:
            raise ValidationError(f"a motion sequence needs L >= 2 frames, got {L}")
        if D != self.skeleton.feature_dim:
            raise ValidationError(
                f"feature dimension {D} does not match skeleton "
                f"(expected {self.skeleton.feature_dim} for N={self.skeleton.joint_count})"
            )
        if not np.isfinite(frames).all():
            raise ValidationError("frames contain non-finite values")
        if self.fps <= 0:
            raise ValidationError("fps must be positive")

    @property
    def length(self):
        return self.frames.shape[0]

    @property
    def feature_dim(self):
        return self.frames.shape[1]

    def positions(self):
        """The j channel as (L, N, 3)."""
        return decode_positions(self)

    def velocities(self):
        sl = feature_slices(self.skeleton.joint_count)["v"]
        L = self.length
        return self.frames[:, sl].reshape(L, self.skeleton.joint_count, 3).astype(np.float64)

    def rotations_6d(self):
        sl = feature_slices(self.skeleton.joint_count)["r"]
        L = self.length
        return self.frames[:, sl].reshape(L, self.skeleton.joint_count - 1, 6).astype(np.float64)

    def contacts(self):
        sl = feature_slices(self.skeleton.joint_count)["f"]
        return self.frames[:, sl].astype(np.float64)

    def clip(self, start, length):
        if start < 0 or start + length > self.length:
            raise ValidationError("clip window out of range")
        return MotionSequence(self.frames[start : start + length], self.fps, self.skeleton)


@dataclass(frozen=True)
class InteractionPair:
    """Aligned actor/reactor sequences in one shared world frame."""

    actor: MotionSequence
    reactor: MotionSequence
    emotion: Optional[str] = None

    def __post_init__(self):
        if self.actor.length != self.reactor.length:
            raise ValidationError("actor and reactor must have the same length")
        if self.actor.skeleton.parents != self.reactor.skeleton.parents:
            raise ValidationError("actor and reactor must share one skeleton")
        if self.emotion is not None:
            emotion_index(self.emotion)


def forward_kinematics(root_position, local_rotations, skeleton):
    """Global joint positions for one frame.

    local_rotations: (N-1, 3, 3) parent-local rotations of the non-root
    joints; the root's own orientation is identity (it is carried by the
    positions elsewhere). Child position = parent position + parent global
    rotation @ rest offset, so bone lengths equal rest lengths exactly.
    """
    n = skeleton.joint_count
    root_position = np.asarray(root_position, dtype=np.float64)
    local_rotations = np.asarray(local_rotations, dtype=np.float64)
    if local_rotations.shape != (n - 1, 3, 3):
        raise ValidationError(
            f"local_rotations must be ({n - 1}, 3, 3), got {local_rotations.shape}"
        )
    positions = np.empty((n, 3))
    global_rot = np.empty((n, 3, 3))
    positions[0] = root_position
    global_rot[0] = np.eye(3)
    for i in range(1, n):
        p = skeleton.parents[i]
        positions[i] = positions[p] + global_rot[p] @ skeleton.rest_offsets[i]
        global_rot[i] = global_rot[p] @ local_rotations[i - 1]
    return positions


def fk_sequence(root_positions, local_rotations, skeleton):
    """forward_kinematics over L frames: (L, 3), (L, N-1, 3, 3) -> (L, N, 3)."""
    return np.stack(
        [forward_kinematics(rp, lr, skeleton) for rp, lr in zip(root_positions, local_rotations)]
    )


def detect_foot_contacts(positions, foot_joint_ids, height_thresh, vel_thresh, fps):
    """Per-frame contact flags: height below threshold AND speed below threshold.

    positions: (L, N, 3), y-up. Speeds use forward differences; the last
    frame copies the previous one (the first frame therefore uses the
    difference to frame 2).
    """
    if height_thresh <= 0 or vel_thresh <= 0:
        raise ValidationError("contact thresholds must be positive")
    positions = np.asarray(positions, dtype=np.float64)
    L, n = positions.shape[0], positions.shape[1]
    for j in foot_joint_ids:
        if not 0 <= j < n:
            raise ValidationError(f"foot joint id {j} out of range for {n} joints")
    feet = positions[:, list(foot_joint_ids), :]  # (L, 4, 3)
    heights = feet[:, :, 1]
    speeds = np.empty((L, len(foot_joint_ids)))
    diffs = np.linalg.norm(feet[1:] - feet[:-1], axis=-1) * fps
    speeds[:-1] = diffs
    speeds[-1] = diffs[-1]
    flags = (heights < height_thresh) & (speeds < vel_thresh)
    return flags.astype(np.float64)


def encode_sequence(
    global_positions,
    local_rotations,
    skeleton,
    fps,
    contact_height_thresh=0.05,
    contact_vel_thresh=0.10,
):
    """Build a MotionSequence from positions and parent-local rotations.

    global_positions: (L, N, 3); local_rotations: (L, N-1, 3, 3).
    Velocities are forward differences scaled by fps, last frame copied.
    """
    positions = np.asarray(global_positions, dtype=np.float64)
    rotations = np.asarray(local_rotations, dtype=np.float64)
    n = skeleton.joint_count
    if positions.ndim != 3 or positions.shape[1:] != (n, 3):
        raise ValidationError(f"positions must be (L, {n}, 3), got {positions.shape}")
    L = positions.shape[0]
    if L < 2:
        raise ValidationError("need at least 2 frames")
    if rotations.shape != (L, n - 1, 3, 3):
        raise ValidationError(
            f"rotations must be ({L}, {n - 1}, 3, 3), got {rotations.shape}"
        )
    if not np.isfinite(positions).all() or not np.isfinite(rotations).all():
        raise ValidationError("non-finite input")

    velocities = np.empty_like(positions)
    velocities[:-1] = (positions[1:] - positions[:-1]) * fps
    velocities[-1] = velocities[-2]

    r6 = rot6d_from_matrix(rotations).reshape(L, 6 * (n - 1))
    contacts = detect_foot_contacts(
        positions, skeleton.foot_joint_ids, contact_height_thresh, contact_vel_thresh, fps
    )
    frames = np.concatenate(
        [positions.reshape(L, 3 * n), velocities.reshape(L, 3 * n), r6, contacts],
        axis=1,
    )
    return MotionSequence(frames.astype(np.float32), fps, skeleton)


def decode_positions(m):
    """The j channel of a MotionSequence, reshaped to (L, N, 3). No FK."""
    sl = feature_slices(m.skeleton.joint_count)["j"]
    return m.frames[:, sl].reshape(m.length, m.skeleton.joint_count, 3).astype(np.float64)


def decode_rotation_matrices(m):
    """Parent-local rotation matrices (L, N-1, 3, 3) from the r channel."""
    return rot6d_to_matrix(m.rotations_6d())
