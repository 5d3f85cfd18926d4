"""Export motions for external viewers: BVH (ZYX Euler) and JSON positions."""

import json
import math

import numpy as np

from ereact.motion import decode_positions, decode_rotation_matrices
from ereact.rotations import euler_zyx_from_matrix
from ereact.skeleton import ValidationError


def export_json(motion, path):
    """Plain JSON dump of per-frame joint positions; round-trips exactly."""
    payload = {
        "format": "ereact-positions-v1",
        "fps": motion.fps,
        "joint_names": list(motion.skeleton.joint_names)
        if motion.skeleton.joint_names
        else None,
        "positions": decode_positions(motion).tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_json_positions(path):
    with open(path) as fh:
        payload = json.load(fh)
    return np.asarray(payload["positions"], dtype=np.float64)


def _bvh_joint(lines, skeleton, joint, indent, names):
    pad = "\t" * indent
    label = "ROOT" if joint == 0 else "JOINT"
    lines.append(f"{pad}{label} {names[joint]}")
    lines.append(pad + "{")
    off = skeleton.rest_offsets[joint]
    lines.append(f"{pad}\tOFFSET {off[0]:.6f} {off[1]:.6f} {off[2]:.6f}")
    if joint == 0:
        lines.append(
            f"{pad}\tCHANNELS 6 Xposition Yposition Zposition "
            "Zrotation Yrotation Xrotation"
        )
    else:
        lines.append(f"{pad}\tCHANNELS 3 Zrotation Yrotation Xrotation")
    children = skeleton.children_of(joint)
    if children:
        for child in children:
            _bvh_joint(lines, skeleton, child, indent + 1, names)
    else:
        lines.append(f"{pad}\tEnd Site")
        lines.append(pad + "\t{")
        lines.append(f"{pad}\t\tOFFSET 0.000000 0.000000 0.000000")
        lines.append(pad + "\t}")
    lines.append(pad + "}")


def export_bvh(motion, path):
    """BVH with rest offsets as the hierarchy and per-frame ZYX Euler rotations.

    The root carries the stored root position; its own rotation channel is
    zero (orientation is carried by the joint rotations/positions).
    """
    skeleton = motion.skeleton
    n = skeleton.joint_count
    names = (
        list(skeleton.joint_names)
        if skeleton.joint_names
        else [f"joint{i}" for i in range(n)]
    )
    lines = ["HIERARCHY"]
    _bvh_joint(lines, skeleton, 0, 0, names)

    positions = decode_positions(motion)
    rotations = decode_rotation_matrices(motion)  # (L, N-1, 3, 3)
    eulers = np.degrees(euler_zyx_from_matrix(rotations)) if n > 1 else None

    lines.append("MOTION")
    lines.append(f"Frames: {motion.length}")
    lines.append(f"Frame Time: {1.0 / motion.fps:.8f}")
    for i in range(motion.length):
        values = [positions[i, 0, 0], positions[i, 0, 1], positions[i, 0, 2], 0.0, 0.0, 0.0]
        # channel order follows the hierarchy (depth-first), not joint index
        for joint in _depth_first_order(skeleton):
            if joint == 0:
                continue
            values.extend(eulers[i, joint - 1])
        lines.append(" ".join(f"{v:.6f}" for v in values))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _depth_first_order(skeleton):
    order = []

    def visit(j):
        order.append(j)
        for child in skeleton.children_of(j):
            visit(child)

    visit(0)
    return order


def export_motion(motion, fmt, path):
    if fmt == "bvh":
        export_bvh(motion, path)
    elif fmt == "json":
        export_json(motion, path)
    else:
        raise ValidationError(f"unknown export format {fmt!r}; use bvh or json")
