"""Training loop for the actor-reactor denoiser.

Each step: draw a batch of interaction pairs, sample one timestep per pair,
noise the reactor only (the non-fixed arm also noises the actor), condition
on an embedding from the frozen prior (or the label embedding in the
one-hot arm), predict the clean reactor, and apply the weighted sum of the
six loss terms.
"""

from dataclasses import dataclass, field

import numpy as np
import torch

from ereact.encoder import NumericalError, classify_motion
from ereact.losses import (
    loss_emotion,
    loss_geometric,
    loss_react,
    loss_reconstruction,
)
from ereact.prior import TrainingHistory
from ereact.sampling import ARCHITECTURES, CONDITION_MODES
from ereact.skeleton import ValidationError, emotion_index

DEFAULT_LOSS_WEIGHTS = {
    "rc": 1.0,
    "react": 1.0,
    "bone": 1.0,
    "smooth": 1.0,
    "foot": 1.0,
    "emo": 1.0,
}


@dataclass
class DiffusionTrainConfig:
    epochs: int = 60
    batch_size: int = 16
    lr: float = 3e-4
    seed: int = 0
    condition_mode: str = "sampled"
    architecture: str = "symmetric-fixed"
    loss_weights: dict = field(default_factory=lambda: dict(DEFAULT_LOSS_WEIGHTS))

    def __post_init__(self):
        if self.condition_mode not in CONDITION_MODES:
            raise ValidationError(f"unknown condition mode {self.condition_mode!r}")
        if self.architecture not in ARCHITECTURES:
            raise ValidationError(f"unknown architecture {self.architecture!r}")
        unknown = set(self.loss_weights) - set(DEFAULT_LOSS_WEIGHTS)
        if unknown:
            raise ValidationError(f"unknown loss weight keys: {sorted(unknown)}")
        weights = dict(DEFAULT_LOSS_WEIGHTS)
        weights.update(self.loss_weights)
        self.loss_weights = weights


def feature_range(pairs):
    """Per-channel (min, max) of the reactor features; used to clamp x0."""
    frames = np.concatenate([p.reactor.frames for p in pairs], axis=0)
    return frames.min(axis=0), frames.max(axis=0)


def train_diffusion(denoiser, pairs, schedule, encoder, prior, config):
    """Train the denoiser on interaction pairs. Returns a TrainingHistory.

    pairs: list of InteractionPair (emotion may be None; those get their
    conditioning class from the frozen encoder's prediction on the
    ground-truth reactor). encoder and prior are frozen.
    """
    if not pairs:
        raise ValidationError("need at least one training pair")
    if config.architecture == "asymmetric" and denoiser.config.shared_projection:
        raise ValidationError(
            "asymmetric training requires a denoiser built with shared_projection=False"
        )
    if config.architecture != "asymmetric" and not denoiser.config.shared_projection:
        raise ValidationError("non-shared denoiser is only valid with the asymmetric arm")

    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    encoder.eval()
    for p in encoder.parameters():
        p.requires_grad_(False)

    x_a = torch.as_tensor(np.stack([p.actor.frames for p in pairs]), dtype=torch.float32)
    x_r = torch.as_tensor(np.stack([p.reactor.frames for p in pairs]), dtype=torch.float32)
    classes = np.empty(len(pairs), dtype=int)
    for i, p in enumerate(pairs):
        if p.emotion is not None:
            classes[i] = emotion_index(p.emotion)
        else:
            classes[i] = int(np.argmax(classify_motion(encoder, p.reactor)))

    n_joints = pairs[0].actor.skeleton.joint_count
    skeleton = pairs[0].actor.skeleton
    fps = pairs[0].actor.fps
    T = schedule.num_steps
    ab = torch.as_tensor(schedule.alpha_bars, dtype=torch.float32)
    mu = torch.as_tensor(prior.means, dtype=torch.float32)
    sigma = torch.as_tensor(np.sqrt(prior.variances), dtype=torch.float32)
    w = config.loss_weights
    non_fixed = config.architecture == "non-fixed"

    opt = torch.optim.Adam(denoiser.parameters(), lr=config.lr)
    history = TrainingHistory()
    n = len(pairs)
    for epoch in range(config.epochs):
        denoiser.train()
        order = rng.permutation(n)
        sums = {k: 0.0 for k in ("total", *w)}
        n_steps = 0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            b = len(idx)
            x0 = x_r[idx]
            a = x_a[idx]
            cls = torch.as_tensor(classes[idx], dtype=torch.long)
            t = torch.as_tensor(rng.integers(1, T + 1, size=b), dtype=torch.long)
            sab = ab[t - 1].sqrt().view(b, 1, 1)
            somab = (1.0 - ab[t - 1]).sqrt().view(b, 1, 1)
            eps = torch.as_tensor(
                rng.standard_normal(x0.shape), dtype=torch.float32
            )
            x_t = sab * x0 + somab * eps

            a_in = a
            if non_fixed:
                eps_a = torch.as_tensor(
                    rng.standard_normal(a.shape), dtype=torch.float32
                )
                a_in = sab * a + somab * eps_a

            e_hat = None
            class_ids = None
            if config.condition_mode == "one-hot":
                class_ids = cls
            elif config.condition_mode == "centroid":
                e_hat = mu[cls]
            else:
                z = torch.as_tensor(
                    rng.standard_normal((b, mu.shape[1])), dtype=torch.float32
                )
                e_hat = mu[cls] + sigma[cls] * z

            pred = denoiser(x_t, t, a_in, e=e_hat, class_ids=class_ids)

            terms = {}
            terms["rc"] = loss_reconstruction(pred, x0)
            terms["react"] = (
                loss_react(a, x0, pred, n_joints) if w["react"] else torch.zeros(())
            )
            if w["bone"] or w["smooth"] or w["foot"]:
                bone, smooth, foot = loss_geometric(pred, x0, skeleton, fps)
            else:
                bone = smooth = foot = torch.zeros(())
            terms["bone"], terms["smooth"], terms["foot"] = bone, smooth, foot
            terms["emo"] = (
                loss_emotion(encoder, prior, pred, classes[idx])
                if w["emo"]
                else torch.zeros(())
            )
            total = sum(w[k] * terms[k] for k in terms)
            if not torch.isfinite(total):
                detail = {k: float(v) for k, v in terms.items()}
                raise NumericalError(
                    f"non-finite diffusion loss at epoch {epoch}: {detail}"
                )
            opt.zero_grad()
            total.backward()
            opt.step()
            sums["total"] += float(total.detach())
            for k in terms:
                sums[k] += float(terms[k].detach())
            n_steps += 1
        history.append(epoch=epoch, **{f"loss_{k}": v / n_steps for k, v in sums.items()})
    denoiser.eval()
    return history
