"""Symmetric actor-reactor denoiser.

Both streams go through one shared input projection into the latent space.
Each paired block updates the two streams in parallel: the reactor attends
to the actor's latents with the timestep token and (if present) the emotion
token appended to the attended context; the actor attends to the reactor's
latents with the timestep token only. Context tokens are layer-normed before
cross-attention so conditioning tokens of very different magnitudes (e.g.
prior embeddings vs. latent frames) compete on equal footing. The actor's input features are always
clean; the network predicts the clean reactor features (x0-parameterized).

Ablation arms:
  shared_projection=False ("asymmetric"): the actor runs through an
  independent self-attention encoder with its own input projection.
  The "non-fixed" arm is a training/sampling policy, not an architecture
  change; see diffusion_training / sampling.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from ereact.encoder import sinusoidal_embedding
from ereact.skeleton import NUM_EMOTIONS, ValidationError


@dataclass
class DenoiserConfig:
    feature_dim: int
    emotion_dim: int
    latent_dim: int = 64
    layers: int = 4
    heads: int = 4
    dropout: float = 0.1
    time_dim: int = 64
    max_len: int = 256
    shared_projection: bool = True

    def __post_init__(self):
        if self.latent_dim % self.heads != 0:
            raise ValidationError("latent_dim must be divisible by heads")

    def to_dict(self):
        return {
            "feature_dim": self.feature_dim,
            "emotion_dim": self.emotion_dim,
            "latent_dim": self.latent_dim,
            "layers": self.layers,
            "heads": self.heads,
            "dropout": self.dropout,
            "time_dim": self.time_dim,
            "max_len": self.max_len,
            "shared_projection": self.shared_projection,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


# paper-scale preset (supplement values); desk defaults above
PAPER_DENOISER = dict(latent_dim=1024, layers=8, heads=8, dropout=0.1)


def _sinusoidal_positions(max_len, dim):
    pos = torch.arange(max_len, dtype=torch.float64)
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float64) / half)
    args = pos[:, None] * freqs[None, :]
    pe = torch.cat([torch.sin(args), torch.cos(args)], dim=-1)
    if dim % 2:
        pe = torch.cat([pe, torch.zeros_like(pe[:, :1])], dim=-1)
    return pe


class StreamBlock(nn.Module):
    """Pre-norm self-attention + cross-attention + MLP for one stream.

    The same block instance serves both streams, so actor and reactor
    updates share weights.
    """

    def __init__(self, dim, heads, dropout, mlp_ratio=4):
        super().__init__()
        self.ln_self = nn.LayerNorm(dim)
        self.self_attn = nn.MultiheadAttention(dim, heads, dropout=dropout, batch_first=True)
        self.ln_cross = nn.LayerNorm(dim)
        self.ln_ctx = nn.LayerNorm(dim)
        self.cross_attn = nn.MultiheadAttention(dim, heads, dropout=dropout, batch_first=True)
        self.ln_mlp = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, mlp_ratio * dim),
            nn.GELU(),
            nn.Dropout(dropout),
            nn.Linear(mlp_ratio * dim, dim),
            nn.Dropout(dropout),
        )

    def forward(self, x, context):
        h = self.ln_self(x)
        x = x + self.self_attn(h, h, h, need_weights=False)[0]
        q = self.ln_cross(x)
        kv = self.ln_ctx(context)
        x = x + self.cross_attn(q, kv, kv, need_weights=False)[0]
        x = x + self.mlp(self.ln_mlp(x))
        return x


class SelfOnlyBlock(nn.Module):
    """Independent actor encoder block for the asymmetric ablation."""

    def __init__(self, dim, heads, dropout, mlp_ratio=4):
        super().__init__()
        self.ln1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, heads, dropout=dropout, batch_first=True)
        self.ln2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, mlp_ratio * dim),
            nn.GELU(),
            nn.Dropout(dropout),
            nn.Linear(mlp_ratio * dim, dim),
            nn.Dropout(dropout),
        )

    def forward(self, x):
        h = self.ln1(x)
        x = x + self.attn(h, h, h, need_weights=False)[0]
        x = x + self.mlp(self.ln2(x))
        return x


class ReactionDenoiser(nn.Module):
    def __init__(self, config):
        super().__init__()
        self.config = config
        d = config.latent_dim
        self.input_proj = nn.Linear(config.feature_dim, d)
        if not config.shared_projection:
            self.actor_proj = nn.Linear(config.feature_dim, d)
            self.actor_blocks = nn.ModuleList(
                [SelfOnlyBlock(d, config.heads, config.dropout) for _ in range(config.layers)]
            )
        self.time_mlp = nn.Sequential(
            nn.Linear(config.time_dim, d), nn.GELU(), nn.Linear(d, d)
        )
        self.emo_proj = nn.Linear(config.emotion_dim, d)
        self.class_embedding = nn.Embedding(NUM_EMOTIONS, d)  # one-hot arm
        self.blocks = nn.ModuleList(
            [StreamBlock(d, config.heads, config.dropout) for _ in range(config.layers)]
        )
        self.ln_out = nn.LayerNorm(d)
        self.output_proj = nn.Linear(d, config.feature_dim)
        pe = _sinusoidal_positions(config.max_len, d)
        self.register_buffer("positional", pe.to(torch.float32))

    def project_frames(self, x, branch="reactor"):
        """Latent projection of raw frames; exposes the weight-sharing contract."""
        if branch == "actor" and not self.config.shared_projection:
            return self.actor_proj(x)
        return self.input_proj(x)

    def emotion_token(self, e=None, class_ids=None):
        """(B, 1, D_L) token, or None for unconditional generation."""
        if e is not None and class_ids is not None:
            raise ValidationError("pass either an embedding or class ids, not both")
        if e is not None:
            return self.emo_proj(e).unsqueeze(1)
        if class_ids is not None:
            return self.class_embedding(class_ids).unsqueeze(1)
        return None

    def forward(self, x_r_t, t, x_a, e=None, class_ids=None):
        """Predict clean reactor features.

        x_r_t, x_a: (B, L, D); t: (B,) int timesteps; e: (B, D_e) emotion
        embedding or None; class_ids: (B,) int for the one-hot arm.
        """
        if x_r_t.shape != x_a.shape:
            raise ValidationError(
                f"actor/reactor shape mismatch: {tuple(x_a.shape)} vs {tuple(x_r_t.shape)}"
            )
        B, L, D = x_r_t.shape
        if L > self.config.max_len:
            raise ValidationError(f"sequence length {L} exceeds max_len {self.config.max_len}")
        dtype = x_r_t.dtype
        pos = self.positional[:L].to(dtype)
        h_r = self.project_frames(x_r_t, "reactor") + pos
        h_a = self.project_frames(x_a, "actor") + pos

        t_tok = self.time_mlp(
            sinusoidal_embedding(t, self.config.time_dim).to(dtype)
        ).unsqueeze(1)
        e_tok = self.emotion_token(e, class_ids)

        for i, block in enumerate(self.blocks):
            ctx_r = [h_a, t_tok] + ([e_tok] if e_tok is not None else [])
            h_r_new = block(h_r, torch.cat(ctx_r, dim=1))
            if self.config.shared_projection:
                h_a = block(h_a, torch.cat([h_r, t_tok], dim=1))
            else:
                h_a = self.actor_blocks[i](h_a)
            h_r = h_r_new
        return self.output_proj(self.ln_out(h_r))


def denoise(denoiser, x_r_t, t, x_a, e_hat=None, class_ids=None):
    """Single-sequence convenience wrapper: (L, D) in, (L, D) out."""
    x_r_t = torch.as_tensor(x_r_t)
    x_a = torch.as_tensor(x_a, dtype=x_r_t.dtype)
    single = x_r_t.ndim == 2
    if single:
        x_r_t, x_a = x_r_t.unsqueeze(0), x_a.unsqueeze(0)
        if e_hat is not None:
            e_hat = torch.as_tensor(e_hat, dtype=x_r_t.dtype).unsqueeze(0)
        t = torch.as_tensor([t])
    out = denoiser(x_r_t, t, x_a, e=e_hat, class_ids=class_ids)
    return out[0] if single else out
