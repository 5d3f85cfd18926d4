"""Motion file format: binary per-sequence blobs plus a JSON manifest.

Blob layout: magic "EMO1", little-endian u32 L, u32 D, then L*D float32
values row-major. The manifest describes the skeleton, fps and all
sequences; hidden labels for the unlabeled split live in a sealed sidecar
(labels.hidden.json) that training code refuses to read.
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ereact.motion import MotionSequence
from ereact.skeleton import SkeletonSpec, ValidationError

MOTION_MAGIC = b"EMO1"
SIDECAR_NAME = "labels.hidden.json"
MANIFEST_NAME = "manifest.json"


class ArtifactError(IOError):
    """A required file is missing or corrupt."""


def write_motion_blob(path, frames):
    frames = np.asarray(frames, dtype=np.float32)
    if frames.ndim != 2:
        raise ValidationError("motion blob payload must be 2-D")
    L, D = frames.shape
    with open(path, "wb") as fh:
        fh.write(MOTION_MAGIC)
        fh.write(struct.pack("<II", L, D))
        fh.write(frames.astype("<f4").tobytes(order="C"))


def read_motion_blob(path):
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"motion file not found: {path}")
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != MOTION_MAGIC:
        raise ArtifactError(f"not a motion blob (bad magic): {path}")
    L, D = struct.unpack("<II", data[4:12])
    expected = 12 + 4 * L * D
    if len(data) != expected:
        raise ArtifactError(
            f"truncated motion blob {path}: expected {expected} bytes, got {len(data)}"
        )
    frames = np.frombuffer(data, dtype="<f4", offset=12).reshape(L, D)
    return np.array(frames)  # copy: decouple from the mmap/buffer


@dataclass
class SequenceEntry:
    id: str
    actor_file: str
    reactor_file: str
    length: int
    split: str  # labeled_train | unlabeled_train | eval
    emotion: str = None

    def to_dict(self):
        d = {
            "id": self.id,
            "actor_file": self.actor_file,
            "reactor_file": self.reactor_file,
            "length": self.length,
            "split": self.split,
        }
        if self.emotion is not None:
            d["emotion"] = self.emotion
        return d


@dataclass
class DatasetManifest:
    skeleton: SkeletonSpec
    fps: float
    seed: int
    counts: dict
    entries: list = field(default_factory=list)

    def to_dict(self):
        return {
            "format": "ereact-dataset-v1",
            "skeleton": self.skeleton.to_dict(),
            "fps": self.fps,
            "seed": self.seed,
            "counts": self.counts,
            "sequences": [e.to_dict() for e in self.entries],
        }

    def save(self, root):
        root = Path(root)
        with open(root / MANIFEST_NAME, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, root):
        root = Path(root)
        path = root / MANIFEST_NAME
        if not path.exists():
            raise ArtifactError(f"dataset manifest not found: {path}")
        with open(path) as fh:
            d = json.load(fh)
        entries = [
            SequenceEntry(
                id=e["id"],
                actor_file=e["actor_file"],
                reactor_file=e["reactor_file"],
                length=e["length"],
                split=e["split"],
                emotion=e.get("emotion"),
            )
            for e in d["sequences"]
        ]
        ids = [e.id for e in entries]
        if len(set(ids)) != len(ids):
            raise ArtifactError("manifest contains duplicate sequence ids")
        return cls(
            skeleton=SkeletonSpec.from_dict(d["skeleton"]),
            fps=d["fps"],
            seed=d["seed"],
            counts=d["counts"],
            entries=entries,
        )

    def split_entries(self, split):
        return [e for e in self.entries if e.split == split]


def load_pair(root, entry, skeleton, fps):
    """Read one entry's actor/reactor blobs as MotionSequences."""
    root = Path(root)
    actor = MotionSequence(read_motion_blob(root / entry.actor_file), fps, skeleton)
    reactor = MotionSequence(read_motion_blob(root / entry.reactor_file), fps, skeleton)
    return actor, reactor


def read_sealed_labels(root, allow_sealed=False):
    """Hidden labels of the unlabeled split; evaluation-only.

    Callers must pass allow_sealed=True explicitly; training code never
    does, which is how the seal is enforced.
    """
    if not allow_sealed:
        raise PermissionError(
            "refusing to read the sealed label sidecar without allow_sealed=True; "
            "it is reserved for evaluation"
        )
    path = Path(root) / SIDECAR_NAME
    if not path.exists():
        raise ArtifactError(f"sealed label sidecar not found: {path}")
    with open(path) as fh:
        return json.load(fh)
