"""Procedural two-person interaction generator with emotion-dependent styles.

Each emotion maps to a distinct motion style (gesture amplitude/frequency,
approach or retreat speed, posture pitch, tempo). The actor performs a
scripted approach-and-gesture motion; the reactor's trajectory and gesture
style are modulated by the emotion. Styles are constructed so that simple
statistics (mean speed, gesture amplitude, net approach displacement)
separate the 7 classes.
"""

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ereact.motion import MotionSequence, InteractionPair, encode_sequence, fk_sequence
from ereact.motion_io import (
    SIDECAR_NAME,
    ArtifactError,
    DatasetManifest,
    SequenceEntry,
    write_motion_blob,
)
from ereact.rotations import axis_angle_matrix
from ereact.skeleton import (
    EMOTIONS,
    HUMANOID_ROOT_HEIGHT,
    ValidationError,
    default_humanoid,
    emotion_index,
)

MIN_ROOT_DISTANCE = 0.2
MIN_LENGTH = 16


class ArtifactPathError(ArtifactError):
    """Output location invalid (missing parent directory)."""


@dataclass(frozen=True)
class StyleParams:
    """Per-emotion motion style knobs."""

    amplitude: float  # gesture amplitude, meters
    frequency: float  # gesture frequency, Hz
    approach_speed: float  # m/s toward (+) or away from (-) the partner
    pitch_offset: float  # spine pitch, radians
    tempo: float  # unitless speed multiplier

    def __post_init__(self):
        if self.amplitude <= 0 or self.frequency <= 0 or self.tempo <= 0:
            raise ValidationError("amplitude, frequency and tempo must be positive")


STYLES = {
    "anger": StyleParams(0.26, 3.1, 0.15, 0.06, 1.6),
    "disgust": StyleParams(0.10, 1.1, -0.40, -0.12, 0.9),
    "fear": StyleParams(0.12, 2.6, -0.70, -0.22, 1.4),
    "happiness": StyleParams(0.30, 2.1, 0.60, 0.10, 1.9),
    "neutral": StyleParams(0.13, 1.15, 0.02, 0.0, 1.0),
    "sadness": StyleParams(0.05, 0.6, -0.05, -0.30, 0.65),
    "surprise": StyleParams(0.21, 2.4, 0.15, 0.15, 1.0),
}

# Joints whose parent-local rotations carry the gesture (humanoid indices,
# shifted by -1 into the rotation channel): spine, shoulders, elbows.
_GESTURE_JOINTS = {
    "spine": 1,
    "l_shoulder": 6,
    "l_elbow": 7,
    "r_shoulder": 9,
    "r_elbow": 10,
}
_ARM_LENGTH = 0.53  # shoulder-to-wrist reach used to map meters to radians


@dataclass(frozen=True)
class ClipPair:
    """Two equal-length windows cut from the same parent sequence."""

    first: MotionSequence
    second: MotionSequence
    parent_id: str = ""

    def __post_init__(self):
        if self.first.length != self.second.length:
            raise ValidationError("clip pair members must have equal length")


def _jittered(style, rng, jitter=0.15):
    """Per-sequence multiplicative jitter so classes form clouds, not points."""
    u = lambda: float(rng.uniform(1.0 - jitter, 1.0 + jitter))
    return StyleParams(
        amplitude=style.amplitude * u(),
        frequency=style.frequency * u(),
        approach_speed=style.approach_speed * u(),
        pitch_offset=style.pitch_offset + float(rng.uniform(-0.02, 0.02)),
        tempo=style.tempo * u(),
    )


def _character_trajectory(start, toward, style, L, fps, rng, scripted=False):
    """Root positions (L, 3). scripted=True uses the actor's fixed approach."""
    t = np.arange(L) / fps
    speed = 0.25 if scripted else style.approach_speed
    # advance toward the partner for the first 60% of the sequence, then hold
    progress = np.minimum(t, 0.6 * t[-1]) if L > 1 else t
    pos = np.empty((L, 3))
    pos[:, 0] = start[0] + toward[0] * speed * progress
    pos[:, 2] = start[2] + toward[2] * speed * progress
    sway = 0.02 * np.sin(2.0 * np.pi * 0.5 * style.tempo * t + rng.uniform(0, 2 * np.pi))
    pos[:, 2] += sway
    bob = 0.02 * style.amplitude * np.sin(2.0 * np.pi * style.frequency * style.tempo * t)
    pos[:, 1] = start[1] + bob
    return pos


def _character_rotations(style, L, fps, n_joints, rng):
    """Parent-local rotations (L, N-1, 3, 3): identity plus styled oscillations."""
    t = np.arange(L) / fps
    rots = np.tile(np.eye(3), (L, n_joints - 1, 1, 1))
    angle_scale = style.amplitude / _ARM_LENGTH
    omega = 2.0 * np.pi * style.frequency * style.tempo
    for name, joint in _GESTURE_JOINTS.items():
        if joint >= n_joints:
            continue
        phase = float(rng.uniform(0, 2 * np.pi))
        if name == "spine":
            angles = style.pitch_offset + 0.1 * angle_scale * np.sin(omega * t + phase)
            axis = (1.0, 0.0, 0.0)
        elif name.endswith("shoulder"):
            angles = angle_scale * np.sin(omega * t + phase)
            axis = (0.0, 0.0, 1.0)
        else:  # elbows
            angles = 0.7 * angle_scale * np.sin(omega * t + phase + 0.5)
            axis = (0.0, 1.0, 0.0)
        for i, a in enumerate(angles):
            rots[i, joint - 1] = axis_angle_matrix(axis, a)
    return rots


def generate_pair(emotion, length, fps, seed, skeleton=None):
    """Deterministic synthetic interaction for one emotion.

    The result is a pure function of (emotion, length, fps, seed). Inter-root
    distance is clamped to stay >= 0.2 m.
    """
    if length < MIN_LENGTH:
        raise ValidationError(f"length must be >= {MIN_LENGTH}, got {length}")
    c = emotion_index(emotion)
    skeleton = skeleton or default_humanoid()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, c]))

    style = _jittered(STYLES[emotion], rng)
    base_y = HUMANOID_ROOT_HEIGHT
    z0 = float(rng.uniform(-0.1, 0.1))
    actor_start = np.array([-1.1, base_y, z0])
    reactor_start = np.array([1.1, base_y, -z0])

    actor_root = _character_trajectory(
        actor_start, (1.0, 0.0, 0.0), style, length, fps, rng, scripted=True
    )
    reactor_root = _character_trajectory(
        reactor_start, (-1.0, 0.0, 0.0), style, length, fps, rng
    )
    # keep the characters apart in the ground plane
    for i in range(length):
        sep = reactor_root[i, [0, 2]] - actor_root[i, [0, 2]]
        d = np.linalg.norm(sep)
        if d < MIN_ROOT_DISTANCE:
            direction = sep / d if d > 1e-9 else np.array([1.0, 0.0])
            reactor_root[i, [0, 2]] = actor_root[i, [0, 2]] + direction * MIN_ROOT_DISTANCE

    n = skeleton.joint_count
    actor_rots = _character_rotations(style, length, fps, n, rng)
    reactor_rots = _character_rotations(style, length, fps, n, rng)

    actor_pos = fk_sequence(actor_root, actor_rots, skeleton)
    reactor_pos = fk_sequence(reactor_root, reactor_rots, skeleton)

    actor = encode_sequence(actor_pos, actor_rots, skeleton, fps)
    reactor = encode_sequence(reactor_pos, reactor_rots, skeleton, fps)
    return InteractionPair(actor=actor, reactor=reactor, emotion=emotion)


def _balanced_labels(count):
    """count labels over the 7 emotions, per-class counts differing by <= 1."""
    base, rem = divmod(count, len(EMOTIONS))
    labels = []
    for i, emo in enumerate(EMOTIONS):
        labels.extend([emo] * (base + (1 if i < rem else 0)))
    return labels


def make_dataset(
    out_dir,
    labeled=200,
    unlabeled=700,
    eval_count=100,
    length=40,
    fps=20.0,
    seed=0,
    skeleton=None,
):
    """Write a full dataset (blobs + manifest + sealed sidecar) to out_dir.

    Labeled and eval splits are balanced over the 7 emotions; the unlabeled
    split covers all styles with labels recorded only in the sealed sidecar.
    """
    if min(labeled, unlabeled, eval_count) < 1:
        raise ValidationError("all split counts must be >= 1")
    out_dir = Path(out_dir)
    if not out_dir.parent.exists():
        raise ArtifactPathError(f"parent directory does not exist: {out_dir.parent}")
    skeleton = skeleton or default_humanoid()
    out_dir.mkdir(exist_ok=True)
    blob_dir = out_dir / "blobs"
    blob_dir.mkdir(exist_ok=True)

    shuffle_rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 7919]))
    plan = []  # (id, split, emotion, reveal_label)
    for i, emo in enumerate(_balanced_labels(labeled)):
        plan.append((f"lab{i:05d}", "labeled_train", emo, True))
    unl_styles = _balanced_labels(unlabeled)
    shuffle_rng.shuffle(unl_styles)
    for i, emo in enumerate(unl_styles):
        plan.append((f"unl{i:05d}", "unlabeled_train", emo, False))
    for i, emo in enumerate(_balanced_labels(eval_count)):
        plan.append((f"evl{i:05d}", "eval", emo, True))

    entries = []
    hidden = {}
    for idx, (seq_id, split, emo, reveal) in enumerate(plan):
        pair_seed = (int(seed) & 0xFFFFFFFF) * 1000003 + idx
        pair = generate_pair(emo, length, fps, pair_seed, skeleton=skeleton)
        a_file = f"blobs/{seq_id}_a.emo"
        r_file = f"blobs/{seq_id}_r.emo"
        write_motion_blob(out_dir / a_file, pair.actor.frames)
        write_motion_blob(out_dir / r_file, pair.reactor.frames)
        entries.append(
            SequenceEntry(
                id=seq_id,
                actor_file=a_file,
                reactor_file=r_file,
                length=length,
                split=split,
                emotion=emo if reveal else None,
            )
        )
        if not reveal:
            hidden[seq_id] = emo

    manifest = DatasetManifest(
        skeleton=skeleton,
        fps=fps,
        seed=int(seed),
        counts={"labeled_train": labeled, "unlabeled_train": unlabeled, "eval": eval_count},
        entries=entries,
    )
    manifest.save(out_dir)
    with open(out_dir / SIDECAR_NAME, "w") as fh:
        json.dump(hidden, fh, indent=2, sort_keys=True)
    return manifest


def resample_clips(seq, k, clip_len, rng, parent_id=""):
    """Cut k random contiguous windows and pair them up (all C(k,2) combos).

    Clips from one sequence share its emotion, which is what the consistency
    loss exploits.
    """
    if clip_len > seq.length:
        raise ValidationError(f"clip_len {clip_len} exceeds sequence length {seq.length}")
    if k < 2:
        raise ValidationError("need k >= 2 clips")
    max_start = seq.length - clip_len
    starts = [int(rng.integers(0, max_start + 1)) for _ in range(k)]
    clips = [seq.clip(s, clip_len) for s in starts]
    return [
        ClipPair(first=clips[i], second=clips[j], parent_id=parent_id)
        for i, j in itertools.combinations(range(k), 2)
    ]
