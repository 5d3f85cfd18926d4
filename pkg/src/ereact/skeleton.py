"""Skeleton definitions: joint tree, rest offsets, foot joints."""

from dataclasses import dataclass, field

import numpy as np

ROOT_PARENT = -1

# The 7 emotion categories, alphabetical. Index order is the label encoding
# used everywhere (losses, prior, metrics).
EMOTIONS = (
    "anger",
    "disgust",
    "fear",
    "happiness",
    "neutral",
    "sadness",
    "surprise",
)
NUM_EMOTIONS = len(EMOTIONS)


class ValidationError(ValueError):
    """Raised when a domain object violates its invariants."""


def emotion_index(name):
    try:
        return EMOTIONS.index(name)
    except ValueError:
        raise ValidationError(
            f"unknown emotion {name!r}; valid names are: " + ", ".join(EMOTIONS)
        ) from None


@dataclass(frozen=True)
class SkeletonSpec:
    """Joint tree defining the kinematic chain.

    parents[0] is the root sentinel (-1); every other parent index must be
    smaller than its child index, so the joints are already in topological
    order. rest_offsets are local translations (meters) from parent to joint.
    """

    parents: tuple
    rest_offsets: np.ndarray  # (N, 3) float64
    foot_joint_ids: tuple
    joint_names: tuple = field(default=None)

    def __post_init__(self):
        parents = tuple(int(p) for p in self.parents)
        object.__setattr__(self, "parents", parents)
        offsets = np.asarray(self.rest_offsets, dtype=np.float64)
        object.__setattr__(self, "rest_offsets", offsets)
        object.__setattr__(self, "foot_joint_ids", tuple(int(i) for i in self.foot_joint_ids))
        n = len(parents)
        if n < 1:
            raise ValidationError("skeleton needs at least one joint")
        if parents[0] != ROOT_PARENT:
            raise ValidationError("parents[0] must be the root sentinel -1")
        for i, p in enumerate(parents[1:], start=1):
            if not 0 <= p < i:
                raise ValidationError(
                    f"joint {i} has parent {p}; parents must satisfy 0 <= parent < child"
                )
        if offsets.shape != (n, 3):
            raise ValidationError(f"rest_offsets must be ({n}, 3), got {offsets.shape}")
        if not np.isfinite(offsets).all():
            raise ValidationError("rest_offsets contain non-finite values")
        lengths = np.linalg.norm(offsets[1:], axis=-1)
        if n > 1 and not (lengths > 0).all():
            bad = int(np.argmin(lengths)) + 1
            raise ValidationError(f"joint {bad} has zero rest bone length")
        if len(self.foot_joint_ids) != 4:
            raise ValidationError("foot_joint_ids must have exactly 4 entries")
        for j in self.foot_joint_ids:
            if not 0 <= j < n:
                raise ValidationError(f"foot joint id {j} out of range for {n} joints")
        if self.joint_names is not None:
            names = tuple(self.joint_names)
            if len(names) != n:
                raise ValidationError("joint_names length mismatch")
            object.__setattr__(self, "joint_names", names)

    @property
    def joint_count(self):
        return len(self.parents)

    @property
    def feature_dim(self):
        """Per-frame feature dimension: 3N + 3N + 6(N-1) + 4 = 12N - 2."""
        return 12 * self.joint_count - 2

    @property
    def rest_lengths(self):
        """Bone lengths of the non-root joints, shape (N-1,)."""
        return np.linalg.norm(self.rest_offsets[1:], axis=-1)

    def children_of(self, joint):
        return [i for i, p in enumerate(self.parents) if p == joint]

    def to_dict(self):
        return {
            "parents": list(self.parents),
            "rest_offsets": self.rest_offsets.tolist(),
            "foot_joint_ids": list(self.foot_joint_ids),
            "joint_names": list(self.joint_names) if self.joint_names else None,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            parents=d["parents"],
            rest_offsets=np.asarray(d["rest_offsets"], dtype=np.float64),
            foot_joint_ids=d["foot_joint_ids"],
            joint_names=d.get("joint_names"),
        )


_HUMANOID = [
    # name, parent, offset (x, y, z); y-up, meters
    ("pelvis", ROOT_PARENT, (0.0, 0.0, 0.0)),
    ("spine", 0, (0.0, 0.12, 0.0)),
    ("chest", 1, (0.0, 0.15, 0.0)),
    ("neck", 2, (0.0, 0.12, 0.0)),
    ("head", 3, (0.0, 0.10, 0.0)),
    ("head_top", 4, (0.0, 0.12, 0.0)),
    ("l_shoulder", 2, (0.18, 0.05, 0.0)),
    ("l_elbow", 6, (0.28, 0.0, 0.0)),
    ("l_wrist", 7, (0.25, 0.0, 0.0)),
    ("r_shoulder", 2, (-0.18, 0.05, 0.0)),
    ("r_elbow", 9, (-0.28, 0.0, 0.0)),
    ("r_wrist", 10, (-0.25, 0.0, 0.0)),
    ("l_hip", 0, (0.10, -0.05, 0.0)),
    ("l_knee", 12, (0.0, -0.42, 0.0)),
    ("l_ankle", 13, (0.0, -0.40, 0.0)),
    ("l_heel", 14, (0.0, -0.06, -0.04)),
    ("l_toe", 14, (0.0, -0.06, 0.12)),
    ("r_hip", 0, (-0.10, -0.05, 0.0)),
    ("r_knee", 17, (0.0, -0.42, 0.0)),
    ("r_ankle", 18, (0.0, -0.40, 0.0)),
    ("r_heel", 19, (0.0, -0.06, -0.04)),
    ("r_toe", 19, (0.0, -0.06, 0.12)),
]

# Root height that puts the heels on the ground plane (y = 0).
HUMANOID_ROOT_HEIGHT = 0.05 + 0.42 + 0.40 + 0.06


def default_humanoid():
    """22-joint generic humanoid, heels/toes as the four foot joints."""
    names, parents, offsets = zip(*_HUMANOID)
    foot_ids = tuple(names.index(n) for n in ("l_heel", "l_toe", "r_heel", "r_toe"))
    return SkeletonSpec(
        parents=parents,
        rest_offsets=np.array(offsets, dtype=np.float64),
        foot_joint_ids=foot_ids,
        joint_names=names,
    )


def chain_skeleton(n_joints, bone_length=0.25):
    """Simple serial chain of n_joints; last 4 joints double as foot joints.

    Used for dimension checks and hand-computable kinematics tests.
    """
    if n_joints < 4:
        raise ValidationError("chain_skeleton needs at least 4 joints")
    parents = [ROOT_PARENT] + list(range(n_joints - 1))
    offsets = np.zeros((n_joints, 3))
    offsets[1:, 1] = bone_length
    foot_ids = tuple(range(n_joints - 4, n_joints))
    return SkeletonSpec(parents=parents, rest_offsets=offsets, foot_joint_ids=foot_ids)
