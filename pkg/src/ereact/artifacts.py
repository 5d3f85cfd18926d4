"""Saving and loading the trained model artifacts."""

from pathlib import Path

import numpy as np

from ereact.checkpoint import (
    load_checkpoint,
    load_module_tensors,
    module_tensors,
    save_checkpoint,
)
from ereact.denoiser import DenoiserConfig, ReactionDenoiser
from ereact.diffusion import DiffusionSchedule
from ereact.encoder import EmotionEncoder, EncoderConfig
from ereact.motion_io import ArtifactError
from ereact.prior import EmotionPrior
from ereact.sampling import ModelBundle
from ereact.skeleton import SkeletonSpec

ENCODER_FILE = "encoder.ckpt"
PRIOR_FILE = "prior.json"
DENOISER_FILE = "denoiser.ckpt"


def save_encoder(path, encoder):
    save_checkpoint(path, {"encoder": encoder.config.to_dict()}, module_tensors(encoder))


def load_encoder(path):
    config, tensors = load_checkpoint(path)
    encoder = EmotionEncoder(EncoderConfig.from_dict(config["encoder"]))
    load_module_tensors(encoder, tensors)
    encoder.eval()
    return encoder


def save_denoiser(
    path, denoiser, schedule, skeleton, fps, clamp_lo, clamp_hi, condition_mode, architecture
):
    config = {
        "denoiser": denoiser.config.to_dict(),
        "schedule": schedule.to_dict(),
        "skeleton": skeleton.to_dict(),
        "fps": fps,
        "condition_mode": condition_mode,
        "architecture": architecture,
    }
    tensors = module_tensors(denoiser)
    tensors["extra/clamp_lo"] = np.asarray(clamp_lo, dtype=np.float32)
    tensors["extra/clamp_hi"] = np.asarray(clamp_hi, dtype=np.float32)
    save_checkpoint(path, config, tensors)


def load_denoiser(path):
    config, tensors = load_checkpoint(path)
    denoiser = ReactionDenoiser(DenoiserConfig.from_dict(config["denoiser"]))
    load_module_tensors(denoiser, tensors)
    denoiser.eval()
    schedule = DiffusionSchedule.from_dict(config["schedule"])
    skeleton = SkeletonSpec.from_dict(config["skeleton"])
    return {
        "denoiser": denoiser,
        "schedule": schedule,
        "skeleton": skeleton,
        "fps": config["fps"],
        "condition_mode": config["condition_mode"],
        "architecture": config["architecture"],
        "clamp_lo": tensors["extra/clamp_lo"],
        "clamp_hi": tensors["extra/clamp_hi"],
    }


def load_bundle(model_dir):
    """Assemble a ModelBundle from a directory of artifacts."""
    model_dir = Path(model_dir)
    enc_path = model_dir / ENCODER_FILE
    prior_path = model_dir / PRIOR_FILE
    den_path = model_dir / DENOISER_FILE
    for p in (enc_path, prior_path, den_path):
        if not p.exists():
            raise ArtifactError(f"missing model artifact: {p}")
    encoder = load_encoder(enc_path)
    prior = EmotionPrior.load(prior_path)
    parts = load_denoiser(den_path)
    return ModelBundle(
        encoder=encoder,
        prior=prior,
        denoiser=parts["denoiser"],
        schedule=parts["schedule"],
        skeleton=parts["skeleton"],
        fps=parts["fps"],
        clamp_lo=parts["clamp_lo"],
        clamp_hi=parts["clamp_hi"],
        condition_mode=parts["condition_mode"],
        architecture=parts["architecture"],
    )
