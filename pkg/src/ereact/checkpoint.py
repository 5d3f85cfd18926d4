"""Checkpoint archive: zip with config.json plus one TEN1 blob per tensor.

Blob layout: magic "TEN1", little-endian u32 rank, u32 dims..., then
float32 data row-major.
"""

import hashlib
import io
import json
import struct
import zipfile
from pathlib import Path

import numpy as np

from ereact.motion_io import ArtifactError

TENSOR_MAGIC = b"TEN1"


def encode_tensor(arr):
    arr = np.asarray(arr, dtype=np.float32)
    out = io.BytesIO()
    out.write(TENSOR_MAGIC)
    out.write(struct.pack("<I", arr.ndim))
    for d in arr.shape:
        out.write(struct.pack("<I", d))
    out.write(arr.astype("<f4").tobytes(order="C"))
    return out.getvalue()


def decode_tensor(data):
    if len(data) < 8 or data[:4] != TENSOR_MAGIC:
        raise ArtifactError("not a TEN1 tensor blob")
    (rank,) = struct.unpack("<I", data[4:8])
    dims = struct.unpack(f"<{rank}I", data[8 : 8 + 4 * rank])
    payload = np.frombuffer(data, dtype="<f4", offset=8 + 4 * rank)
    expected = int(np.prod(dims)) if rank else 1
    if payload.size != expected:
        raise ArtifactError("tensor blob size mismatch")
    return np.array(payload).reshape(dims)


def save_checkpoint(path, config, tensors):
    """config: JSON-serializable dict; tensors: name -> array."""
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        # fixed date_time keeps checkpoints byte-identical across runs
        info = zipfile.ZipInfo("config.json", date_time=(1980, 1, 1, 0, 0, 0))
        zf.writestr(info, json.dumps(config, indent=2, sort_keys=True))
        for name in sorted(tensors):
            info = zipfile.ZipInfo(f"tensors/{name}", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, encode_tensor(tensors[name]))


def load_checkpoint(path):
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"checkpoint not found: {path}")
    tensors = {}
    with zipfile.ZipFile(path) as zf:
        config = json.loads(zf.read("config.json"))
        for name in zf.namelist():
            if name.startswith("tensors/"):
                tensors[name[len("tensors/") :]] = decode_tensor(zf.read(name))
    return config, tensors


def module_tensors(module):
    return {k: v.detach().cpu().numpy() for k, v in module.state_dict().items()}


def load_module_tensors(module, tensors):
    import torch

    state = {k: torch.as_tensor(v) for k, v in tensors.items() if not k.startswith("extra/")}
    module.load_state_dict(state)
    return module


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
