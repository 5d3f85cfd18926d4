"""Semi-supervised encoder training and the per-class Gaussian emotion prior."""

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ereact.encoder import (
    EmotionEncoder,
    NumericalError,
    classify_motion,
    embed_motion,
    loss_consistency,
    loss_cross_entropy,
)
from ereact.skeleton import EMOTIONS, NUM_EMOTIONS, ValidationError, emotion_index
from ereact.synth import resample_clips

VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class EmotionPrior:
    """7 diagonal Gaussians (mean, variance) over the encoder's token space."""

    means: np.ndarray  # (7, D_e)
    variances: np.ndarray  # (7, D_e), every entry >= VARIANCE_FLOOR

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        variances = np.asarray(self.variances, dtype=np.float64)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)
        if means.shape != variances.shape or means.shape[0] != NUM_EMOTIONS:
            raise ValidationError(
                f"prior needs ({NUM_EMOTIONS}, D_e) means and variances, got "
                f"{means.shape} / {variances.shape}"
            )
        if (variances < VARIANCE_FLOOR).any():
            raise ValidationError(f"prior variances must be >= {VARIANCE_FLOOR}")

    @property
    def dim(self):
        return self.means.shape[1]

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(
                {
                    "format": "ereact-prior-v1",
                    "emotions": list(EMOTIONS),
                    "means": self.means.tolist(),
                    "variances": self.variances.tolist(),
                },
                fh,
                indent=2,
            )

    @classmethod
    def load(cls, path):
        path = Path(path)
        with open(path) as fh:
            d = json.load(fh)
        return cls(
            means=np.asarray(d["means"], dtype=np.float64),
            variances=np.asarray(d["variances"], dtype=np.float64),
        )


def sample_emotion(prior, emotion, rng):
    """Draw an embedding from the class Gaussian: mu + sigma * z."""
    c = emotion if isinstance(emotion, int) else emotion_index(emotion)
    z = rng.standard_normal(prior.dim)
    return prior.means[c] + np.sqrt(prior.variances[c]) * z


def kmeans_fixed_init(points, centers, max_iter=100):
    """K-means from fixed initial centers; ties go to the lowest index.

    Deterministic: no random step. Returns (centers, assignments, n_iter).
    Iterates to an assignment fixpoint or max_iter. A cluster left empty
    keeps its previous center.
    """
    points = np.asarray(points, dtype=np.float64)
    centers = np.array(centers, dtype=np.float64, copy=True)
    assign = None
    it = 0
    for it in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
        new_assign = d2.argmin(axis=1)  # argmin takes the lowest index on ties
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(centers.shape[0]):
            mask = assign == c
            if mask.any():
                centers[c] = points[mask].mean(axis=0)
    if assign is None:
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
        assign = d2.argmin(axis=1)
    return centers, assign, it + 1


def fit_prior_from_embeddings(labeled_embeddings, labels, all_embeddings, kmeans_iters=100):
    """Per-class labeled means seed k-means over all embeddings; each final
    cluster keeps its seeding class and is fit with a diagonal Gaussian.

    kmeans_iters=0 skips clustering: the prior is the labeled per-class
    statistics.
    """
    labeled_embeddings = np.asarray(labeled_embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    class_means = np.empty((NUM_EMOTIONS, labeled_embeddings.shape[1]))
    class_vars = np.empty_like(class_means)
    for c in range(NUM_EMOTIONS):
        mask = labels == c
        if mask.sum() < 2:
            raise ValidationError(
                f"class {EMOTIONS[c]} has {int(mask.sum())} labeled examples; need >= 2"
            )
        class_means[c] = labeled_embeddings[mask].mean(axis=0)
        class_vars[c] = labeled_embeddings[mask].var(axis=0)

    if kmeans_iters == 0:
        return EmotionPrior(
            means=class_means, variances=np.maximum(class_vars, VARIANCE_FLOOR)
        )

    all_embeddings = np.asarray(all_embeddings, dtype=np.float64)
    centers, assign, _ = kmeans_fixed_init(all_embeddings, class_means, max_iter=kmeans_iters)
    means = np.empty_like(class_means)
    variances = np.empty_like(class_vars)
    for c in range(NUM_EMOTIONS):
        mask = assign == c
        if not mask.any():
            warnings.warn(
                f"cluster for {EMOTIONS[c]} is empty after k-means; "
                "falling back to labeled-only statistics"
            )
            means[c] = class_means[c]
            variances[c] = class_vars[c]
        else:
            means[c] = all_embeddings[mask].mean(axis=0)
            variances[c] = all_embeddings[mask].var(axis=0)
    return EmotionPrior(means=means, variances=np.maximum(variances, VARIANCE_FLOOR))


def fit_prior(encoder, labeled, full, kmeans_iters=100):
    """Fit the prior from motions.

    labeled: list of (MotionSequence, emotion name); full: all motions to
    cluster (typically every sequence in the training split).
    """
    lab_emb = np.stack([embed_motion(encoder, m) for m, _ in labeled])
    lab_y = np.array([emotion_index(e) for _, e in labeled])
    all_emb = np.stack([embed_motion(encoder, m) for m in full]) if full else lab_emb
    return fit_prior_from_embeddings(lab_emb, lab_y, all_emb, kmeans_iters=kmeans_iters)


@dataclass
class PriorTrainConfig:
    epochs: int = 30
    batch_size: int = 16
    lr: float = 1e-3
    clips_per_seq: int = 2  # k of the clip-resampling scheme
    clip_len: int = None  # default: half the parent length
    ce_weight: float = 1.0
    consistency_weight: float = 1.0
    seed: int = 0
    keep_best: bool = False  # restore the best eval-accuracy weights at the end


@dataclass
class TrainingHistory:
    epochs: list = field(default_factory=list)  # per-epoch dicts

    def append(self, **kwargs):
        self.epochs.append(kwargs)

    def to_dict(self):
        return {"epochs": self.epochs}


def eval_accuracy(encoder, eval_set):
    """Fraction of (motion, label) pairs the encoder classifies correctly."""
    if not eval_set:
        return float("nan")
    hits = 0
    for motion, label in eval_set:
        pred = int(np.argmax(classify_motion(encoder, motion)))
        hits += pred == emotion_index(label)
    return hits / len(eval_set)


def train_prior_encoder(encoder, labeled, unlabeled, config, eval_set=None):
    """Semi-supervised training: cross-entropy on labeled batches plus
    clip-consistency on unlabeled batches; total loss is their sum.

    With an empty unlabeled set this reduces to supervised training.
    Deterministic given config.seed. Returns a TrainingHistory.
    """
    if not labeled:
        raise ValidationError("labeled set must be non-empty")
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    opt = torch.optim.Adam(encoder.parameters(), lr=config.lr)
    history = TrainingHistory()

    lab_x = torch.as_tensor(
        np.stack([m.frames for m, _ in labeled]), dtype=torch.float32
    )
    lab_y = torch.as_tensor([emotion_index(e) for _, e in labeled], dtype=torch.long)

    n_lab = len(labeled)
    best_acc = -1.0
    best_state = None
    for epoch in range(config.epochs):
        encoder.train()
        order = rng.permutation(n_lab)
        unl_order = rng.permutation(len(unlabeled)) if unlabeled else None
        unl_pos = 0
        ce_sum = con_sum = 0.0
        n_steps = 0
        for start in range(0, n_lab, config.batch_size):
            idx = order[start : start + config.batch_size]
            probs = encoder.classify(lab_x[idx])
            ce = loss_cross_entropy(probs, lab_y[idx])
            loss = config.ce_weight * ce
            con = torch.zeros(())
            if unlabeled:
                firsts, seconds = [], []
                for _ in range(min(config.batch_size, len(unlabeled))):
                    seq = unlabeled[int(unl_order[unl_pos % len(unlabeled)])]
                    unl_pos += 1
                    clip_len = config.clip_len or max(2, seq.length // 2)
                    pairs = resample_clips(seq, config.clips_per_seq, clip_len, rng)
                    for pair in pairs:
                        firsts.append(pair.first.frames)
                        seconds.append(pair.second.frames)
                e_i = encoder.embed(torch.as_tensor(np.stack(firsts), dtype=torch.float32))
                e_j = encoder.embed(torch.as_tensor(np.stack(seconds), dtype=torch.float32))
                con = loss_consistency(e_i, e_j)
                loss = loss + config.consistency_weight * con
            if not torch.isfinite(loss):
                raise NumericalError(f"non-finite prior loss at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            ce_sum += float(ce.detach())
            con_sum += float(con.detach())
            n_steps += 1
        record = {
            "epoch": epoch,
            "loss_ce": ce_sum / n_steps,
            "loss_consistency": con_sum / n_steps,
        }
        if eval_set:
            acc = eval_accuracy(encoder, eval_set)
            record["eval_accuracy"] = acc
            if config.keep_best and acc >= best_acc:
                best_acc = acc
                best_state = {k: v.detach().clone() for k, v in encoder.state_dict().items()}
        history.append(**record)
    if config.keep_best and eval_set and best_state is not None:
        encoder.load_state_dict(best_state)
    encoder.eval()
    return history
