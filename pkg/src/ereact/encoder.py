"""Transformer emotion encoder with a classification token.

A motion sequence (L, D) is linearly projected to (L, D_e), a learnable
classification token is prepended, a learnable temporal embedding is added,
and the stack of pre-norm self-attention layers updates all tokens. The
updated token at position 0 is the emotion embedding; an MLP head turns it
into class probabilities.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from ereact.skeleton import NUM_EMOTIONS, ValidationError


class NumericalError(RuntimeError):
    """Training or sampling produced non-finite values."""


@dataclass
class EncoderConfig:
    feature_dim: int
    latent_dim: int = 64
    layers: int = 4
    heads: int = 4
    dropout: float = 0.1
    max_len: int = 96
    num_classes: int = NUM_EMOTIONS

    def __post_init__(self):
        if self.latent_dim % self.heads != 0:
            raise ValidationError("latent_dim must be divisible by heads")
        if self.layers < 1:
            raise ValidationError("need at least one transformer layer")
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError("dropout must be in [0, 1)")

    def to_dict(self):
        return {
            "feature_dim": self.feature_dim,
            "latent_dim": self.latent_dim,
            "layers": self.layers,
            "heads": self.heads,
            "dropout": self.dropout,
            "max_len": self.max_len,
            "num_classes": self.num_classes,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


# paper-scale preset (desk defaults above are CPU-friendly)
PAPER_ENCODER = dict(latent_dim=1024, layers=8, heads=8, dropout=0.3)


class PreNormBlock(nn.Module):
    """x <- x + Self(Ln(x)); x <- x + Mlp(Ln(x))."""

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


class EmotionEncoder(nn.Module):
    def __init__(self, config):
        super().__init__()
        self.config = config
        d = config.latent_dim
        self.input_proj = nn.Linear(config.feature_dim, d)
        self.cls_token = nn.Parameter(torch.zeros(d))
        self.temporal_embedding = nn.Parameter(
            torch.randn(config.max_len + 1, d) * 0.02
        )
        self.blocks = nn.ModuleList(
            [PreNormBlock(d, config.heads, config.dropout) for _ in range(config.layers)]
        )
        self.head = nn.Sequential(
            nn.Linear(d, d),
            nn.GELU(),
            nn.Linear(d, config.num_classes),
        )

    def _check_length(self, L):
        if L > self.config.max_len:
            raise ValidationError(
                f"sequence length {L} exceeds encoder max_len {self.config.max_len}"
            )

    def tokens(self, x):
        """All updated tokens, shape (B, L+1, D_e); x is (B, L, D)."""
        if x.ndim != 3:
            raise ValidationError(f"expected (B, L, D) input, got shape {tuple(x.shape)}")
        B, L, D = x.shape
        if D != self.config.feature_dim:
            raise ValidationError(
                f"feature dim {D} does not match encoder ({self.config.feature_dim})"
            )
        self._check_length(L)
        e = self.input_proj(x)
        cls = self.cls_token.to(e.dtype).expand(B, 1, -1)
        e = torch.cat([cls, e], dim=1) + self.temporal_embedding[: L + 1].to(e.dtype)
        for block in self.blocks:
            e = block(e)
        return e

    def embed(self, x):
        """Emotion embedding (updated classification token), (B, D_e)."""
        return self.tokens(x)[:, 0, :]

    def logits(self, x):
        return self.head(self.embed(x))

    def classify(self, x):
        """Class probabilities (B, num_classes); rows sum to 1."""
        return torch.softmax(self.logits(x), dim=-1)


def _as_batch(motion, dtype=torch.float32):
    return torch.as_tensor(np.asarray(motion.frames), dtype=dtype).unsqueeze(0)


@torch.no_grad()
def embed_motion(encoder, motion):
    """Eval-mode embedding of one MotionSequence as a numpy vector."""
    training = encoder.training
    encoder.eval()
    try:
        out = encoder.embed(_as_batch(motion))[0].cpu().numpy()
    finally:
        encoder.train(training)
    return out


@torch.no_grad()
def classify_motion(encoder, motion):
    """Eval-mode class probabilities of one MotionSequence (numpy, sums to 1)."""
    training = encoder.training
    encoder.eval()
    try:
        out = encoder.classify(_as_batch(motion))[0].cpu().numpy()
    finally:
        encoder.train(training)
    return out


def loss_consistency(e_i, e_j):
    """Squared Euclidean distance between emotion embeddings.

    For batched inputs (B, D_e) returns the mean over the batch.
    """
    if e_i.shape != e_j.shape:
        raise ValidationError(f"embedding shapes differ: {tuple(e_i.shape)} vs {tuple(e_j.shape)}")
    sq = ((e_i - e_j) ** 2).sum(dim=-1)
    return sq.mean()


# counts how often a predicted probability had to be clamped away from zero
CE_CLAMP_EPS = 1e-12
ce_clamp_warnings = 0


def loss_cross_entropy(probabilities, labels):
    """Mean negative log probability of the true class.

    probabilities: (B, C) rows of a softmax; labels: (B,) int class indices.
    Probabilities at the true class are clamped at 1e-12 (counted in
    ce_clamp_warnings) so a confidently wrong model yields a finite loss.
    """
    global ce_clamp_warnings
    if probabilities.ndim != 2:
        raise ValidationError("probabilities must be (B, C)")
    B, C = probabilities.shape
    labels = torch.as_tensor(labels, dtype=torch.long)
    if labels.min() < 0 or labels.max() >= C:
        raise ValidationError(f"label out of range for {C} classes")
    p_true = probabilities[torch.arange(B), labels]
    if bool((p_true < CE_CLAMP_EPS).any()):
        ce_clamp_warnings += 1
    return -(torch.log(p_true.clamp_min(CE_CLAMP_EPS))).mean()


def sinusoidal_embedding(t, dim):
    """Standard sinusoidal embedding of integer timesteps; t is (B,)."""
    t = torch.as_tensor(t, dtype=torch.float64)
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float64) / half)
    args = t[:, None] * freqs[None, :]
    emb = torch.cat([torch.sin(args), torch.cos(args)], dim=-1)
    if dim % 2:
        emb = torch.cat([emb, torch.zeros_like(emb[:, :1])], dim=-1)
    return emb
