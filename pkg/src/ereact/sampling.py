"""Reverse diffusion: DDPM ancestral and deterministic DDIM samplers,
plus the high-level generation entry point (edited / empathetic /
unconditional modes)."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import torch

from ereact.diffusion import posterior_coefficients, q_sample
from ereact.encoder import NumericalError, classify_motion
from ereact.motion import MotionSequence
from ereact.prior import sample_emotion
from ereact.skeleton import EMOTIONS, ValidationError, emotion_index

CONDITION_MODES = ("sampled", "centroid", "one-hot")
ARCHITECTURES = ("symmetric-fixed", "asymmetric", "non-fixed")


def _clamp(x0, clamp_lo, clamp_hi):
    if clamp_lo is None:
        return x0
    lo = torch.as_tensor(clamp_lo, dtype=x0.dtype)
    hi = torch.as_tensor(clamp_hi, dtype=x0.dtype)
    return torch.min(torch.max(x0, lo), hi)


def _eval_mode(denoiser):
    if hasattr(denoiser, "eval"):
        denoiser.eval()


def _predict_x0(denoiser, x, t, x_a, e_hat, class_ids, clamp_lo, clamp_hi):
    pred = denoiser(
        x.unsqueeze(0),
        torch.as_tensor([t]),
        x_a.unsqueeze(0),
        e=None if e_hat is None else e_hat.unsqueeze(0),
        class_ids=class_ids,
    )[0]
    return _clamp(pred, clamp_lo, clamp_hi)


def _actor_input(x_a, t, schedule, non_fixed, gen):
    """Clean actor by default; the non-fixed arm re-noises the ground truth
    to the current level at every step."""
    if not non_fixed:
        return x_a
    eps = torch.randn(x_a.shape, generator=gen, dtype=x_a.dtype)
    return q_sample(schedule, x_a, t, eps)


@torch.no_grad()
def sample_ddpm(
    denoiser,
    schedule,
    x_a,
    e_hat=None,
    class_ids=None,
    seed=0,
    clamp_lo=None,
    clamp_hi=None,
    non_fixed=False,
):
    """Ancestral sampling with the x0-parameterized posterior.

    x_a: (L, D) clean actor features (numpy or torch). Returns (L, D)
    float32 numpy. Pure function of (denoiser, inputs, seed).
    """
    _eval_mode(denoiser)
    x_a = torch.as_tensor(np.asarray(x_a), dtype=torch.float32)
    gen = torch.Generator().manual_seed(int(seed))
    x = torch.randn(x_a.shape, generator=gen, dtype=torch.float32)
    e_hat = None if e_hat is None else torch.as_tensor(e_hat, dtype=torch.float32)
    T = schedule.num_steps
    for t in range(T, 0, -1):
        a_in = _actor_input(x_a, t, schedule, non_fixed, gen)
        x0 = _predict_x0(denoiser, x, t, a_in, e_hat, class_ids, clamp_lo, clamp_hi)
        if t == 1:
            x = x0
            break
        coef_x0, coef_xt, var = posterior_coefficients(schedule, t)
        mean = coef_x0 * x0 + coef_xt * x
        noise = torch.randn(x.shape, generator=gen, dtype=torch.float32)
        x = mean + (var ** 0.5) * noise
    out = x.cpu().numpy().astype(np.float32)
    if not np.isfinite(out).all():
        raise NumericalError("DDPM sampling produced non-finite values")
    return out


def ddim_timesteps(num_steps, steps):
    """Evenly spaced descending timestep subsequence of [1, T]."""
    if not 1 <= steps <= num_steps:
        raise ValidationError(f"ddim steps must be in [1, {num_steps}], got {steps}")
    ts = np.unique(np.round(np.linspace(1, num_steps, steps)).astype(int))
    return ts[::-1].tolist()


@torch.no_grad()
def sample_ddim(
    denoiser,
    schedule,
    x_a,
    e_hat=None,
    class_ids=None,
    steps=50,
    seed=0,
    clamp_lo=None,
    clamp_hi=None,
    non_fixed=False,
):
    """Deterministic DDIM (eta = 0); the seed fixes only the initial noise."""
    _eval_mode(denoiser)
    x_a = torch.as_tensor(np.asarray(x_a), dtype=torch.float32)
    gen = torch.Generator().manual_seed(int(seed))
    x = torch.randn(x_a.shape, generator=gen, dtype=torch.float32)
    e_hat = None if e_hat is None else torch.as_tensor(e_hat, dtype=torch.float32)
    ts = ddim_timesteps(schedule.num_steps, steps)
    for i, t in enumerate(ts):
        t_prev = ts[i + 1] if i + 1 < len(ts) else 0
        a_in = _actor_input(x_a, t, schedule, non_fixed, gen)
        x0 = _predict_x0(denoiser, x, t, a_in, e_hat, class_ids, clamp_lo, clamp_hi)
        ab_t = schedule.alpha_bar(t)
        ab_prev = schedule.alpha_bar(t_prev)
        eps_hat = (x - (ab_t ** 0.5) * x0) / ((1.0 - ab_t) ** 0.5)
        x = (ab_prev ** 0.5) * x0 + ((1.0 - ab_prev) ** 0.5) * eps_hat
    out = x.cpu().numpy().astype(np.float32)
    if not np.isfinite(out).all():
        raise NumericalError("DDIM sampling produced non-finite values")
    return out


@dataclass
class GenerationRequest:
    actor: MotionSequence
    mode: str = "edited"  # edited | empathetic | unconditional
    emotion: Optional[str] = None  # required for edited mode
    sampler: str = "ddim"  # ddim | ddpm
    steps: int = 50  # ddim only
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("edited", "empathetic", "unconditional"):
            raise ValidationError(f"unknown generation mode {self.mode!r}")
        if self.mode == "edited":
            emotion_index(self.emotion)
        if self.sampler not in ("ddim", "ddpm"):
            raise ValidationError(f"unknown sampler {self.sampler!r}")


@dataclass
class ModelBundle:
    """Everything generation needs: frozen encoder, prior, trained denoiser."""

    encoder: object
    prior: object
    denoiser: object
    schedule: object
    skeleton: object
    fps: float
    clamp_lo: np.ndarray = None
    clamp_hi: np.ndarray = None
    condition_mode: str = "sampled"
    architecture: str = "symmetric-fixed"
    meta: dict = field(default_factory=dict)


def generate(request, models):
    """Produce a reactor MotionSequence plus metadata for one request."""
    actor = request.actor
    if request.mode == "edited":
        class_id = emotion_index(request.emotion)
    elif request.mode == "empathetic":
        class_id = int(np.argmax(classify_motion(models.encoder, actor)))
    else:
        class_id = None

    e_hat = None
    class_ids = None
    if class_id is not None:
        if models.condition_mode == "one-hot":
            class_ids = torch.as_tensor([class_id])
        elif models.condition_mode == "centroid":
            e_hat = models.prior.means[class_id].astype(np.float32)
        else:
            rng = np.random.default_rng(
                np.random.SeedSequence([int(request.seed) & 0xFFFFFFFF, class_id, 17])
            )
            e_hat = sample_emotion(models.prior, class_id, rng).astype(np.float32)

    kwargs = dict(
        e_hat=e_hat,
        class_ids=class_ids,
        seed=request.seed,
        clamp_lo=models.clamp_lo,
        clamp_hi=models.clamp_hi,
        non_fixed=models.architecture == "non-fixed",
    )
    if request.sampler == "ddpm":
        frames = sample_ddpm(models.denoiser, models.schedule, actor.frames, **kwargs)
    else:
        frames = sample_ddim(
            models.denoiser, models.schedule, actor.frames, steps=request.steps, **kwargs
        )
    reactor = MotionSequence(frames, models.fps, models.skeleton)
    metadata = {
        "mode": request.mode,
        "class": None if class_id is None else EMOTIONS[class_id],
        "seed": int(request.seed),
        "sampler": request.sampler,
        "steps": int(request.steps) if request.sampler == "ddim" else models.schedule.num_steps,
        "condition_mode": models.condition_mode,
        "architecture": models.architecture,
    }
    return reactor, metadata
