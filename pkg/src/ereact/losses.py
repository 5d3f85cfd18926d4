"""Diffusion training losses: reconstruction, interaction, geometric, emotion.

All losses take torch tensors holding motion features (L, D) or batches
(B, L, D) in the [j, v, r, f] layout and return non-negative scalars.
"""

import numpy as np
import torch

from ereact.motion import feature_slices
from ereact.skeleton import ValidationError

_DIST_EPS = 1e-12  # keeps the distance-map gradient finite at zero distance


def _positions(x, n_joints):
    """The j channel of a feature tensor, as (..., L, N, 3)."""
    sl = feature_slices(n_joints)["j"]
    return x[..., sl].reshape(*x.shape[:-1], n_joints, 3)


def loss_reconstruction(pred_x0, true_x0):
    """Mean squared error over all entries."""
    if pred_x0.shape != true_x0.shape:
        raise ValidationError("prediction/target shape mismatch")
    return ((pred_x0 - true_x0) ** 2).mean()


def interaction_distance_map(x_a, x_r, n_joints):
    """Pairwise actor-reactor joint distances, (..., L, N, N).

    Entry (i, a, b) is the Euclidean distance between actor joint a and
    reactor joint b at frame i, from the position channels.
    """
    if x_a.shape != x_r.shape:
        raise ValidationError("actor/reactor shape mismatch")
    pa = _positions(x_a, n_joints)
    pr = _positions(x_r, n_joints)
    diff = pa.unsqueeze(-2) - pr.unsqueeze(-3)  # (..., L, N, N, 3)
    return torch.sqrt((diff ** 2).sum(dim=-1) + _DIST_EPS)


def loss_react(x_a, x_r_true, x_r_pred, n_joints):
    """MSE between the true and predicted interaction distance maps."""
    true_map = interaction_distance_map(x_a, x_r_true, n_joints)
    pred_map = interaction_distance_map(x_a, x_r_pred, n_joints)
    return ((true_map - pred_map) ** 2).mean()


def loss_geometric(x_r_pred, x_r_true, skeleton, fps):
    """(bone, smooth, foot) regularizers.

    bone: MSE of predicted per-frame bone lengths vs rest lengths.
    smooth: MSE of second-order position differences.
    foot: squared predicted foot-joint speed, gated by the TRUE contact
    flags, averaged over all frames and feet.
    """
    if x_r_pred.shape != x_r_true.shape:
        raise ValidationError("prediction/target shape mismatch")
    n = skeleton.joint_count
    pos = _positions(x_r_pred, n)  # (..., L, N, 3)

    parents = list(skeleton.parents[1:])
    bone_vec = pos[..., 1:, :] - pos[..., parents, :]
    lengths = torch.sqrt((bone_vec ** 2).sum(dim=-1) + _DIST_EPS)
    rest = torch.as_tensor(skeleton.rest_lengths, dtype=pos.dtype)
    bone = ((lengths - rest) ** 2).mean()

    acc = pos[..., 2:, :, :] - 2.0 * pos[..., 1:-1, :, :] + pos[..., :-2, :, :]
    smooth = (acc ** 2).mean()

    feet = pos[..., list(skeleton.foot_joint_ids), :]  # (..., L, 4, 3)
    vel = (feet[..., 1:, :, :] - feet[..., :-1, :, :]) * fps
    speed_sq = (vel ** 2).sum(dim=-1)  # (..., L-1, 4)
    speed_sq = torch.cat([speed_sq, speed_sq[..., -1:, :]], dim=-2)  # last frame copies
    sl = feature_slices(n)["f"]
    flags = x_r_true[..., sl]
    foot = (flags * speed_sq).mean()
    return bone, smooth, foot


def loss_emotion(encoder, prior, x_r_pred, emotion_class):
    """Gaussian alignment of the generated motion's emotion embedding.

    mean over coordinates of (e - mu_c)^2 / (2 sigma_c^2), with e computed
    by the FROZEN encoder. Gradients flow through the embedding into the
    denoiser; encoder parameters must not be part of the optimizer.
    """
    x = x_r_pred if x_r_pred.ndim == 3 else x_r_pred.unsqueeze(0)
    e = encoder.embed(x)
    classes = np.atleast_1d(np.asarray(emotion_class, dtype=int))
    if classes.size == 1 and e.shape[0] > 1:
        classes = np.repeat(classes, e.shape[0])
    mu = torch.as_tensor(prior.means[classes], dtype=e.dtype)
    var = torch.as_tensor(prior.variances[classes], dtype=e.dtype)
    return (((e - mu) ** 2) / (2.0 * var)).mean()
