"""Emotion-driven reaction generation toolkit.

A semi-supervised emotion prior over skeletal motion plus a symmetric
actor-reactor diffusion model that synthesizes a reactor's motion from an
actor's motion and a sampled emotion embedding.
"""

__version__ = "0.1.0"

from ereact.skeleton import SkeletonSpec, default_humanoid, chain_skeleton
from ereact.motion import MotionSequence, InteractionPair

__all__ = [
    "SkeletonSpec",
    "default_humanoid",
    "chain_skeleton",
    "MotionSequence",
    "InteractionPair",
]
