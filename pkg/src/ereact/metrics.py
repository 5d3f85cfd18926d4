"""Evaluation metrics over frozen-encoder features: FID, DIV, MM, ACC."""

import json
from dataclasses import dataclass

import numpy as np

from ereact.skeleton import EMOTIONS, ValidationError

COV_REG = 1e-6


def _stats(features):
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise ValidationError("need a (M, D) feature matrix with M >= 2")
    mu = features.mean(axis=0)
    cov = np.cov(features, rowvar=False)
    cov = np.atleast_2d(cov)
    return mu, cov + COV_REG * np.eye(cov.shape[0])


def _sqrtm_psd(mat):
    """Symmetric PSD square root via eigendecomposition (negative eigenvalues
    from roundoff are clipped)."""
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def fid(real, gen):
    """Frechet distance between Gaussians fit to the two feature sets.

    ||mu_r - mu_g||^2 + Tr(S_r + S_g - 2 (S_r S_g)^{1/2}), with the matrix
    square root computed on the symmetrized product
    S_r^{1/2} S_g S_r^{1/2}. Clamped at 0.
    """
    mu_r, cov_r = _stats(real)
    mu_g, cov_g = _stats(gen)
    r_half = _sqrtm_psd(cov_r)
    inner = _sqrtm_psd(r_half @ cov_g @ r_half)
    value = float(((mu_r - mu_g) ** 2).sum() + np.trace(cov_r + cov_g - 2.0 * inner))
    return max(value, 0.0)


def diversity(features, pair_count=300, rng=None):
    """Mean Euclidean distance over randomly sampled distinct-index row pairs."""
    features = np.asarray(features, dtype=np.float64)
    M = features.shape[0]
    if M < 2:
        raise ValidationError("diversity needs at least 2 rows")
    rng = rng or np.random.default_rng(0)
    i = rng.integers(0, M, size=pair_count)
    j = rng.integers(0, M - 1, size=pair_count)
    j = np.where(j >= i, j + 1, j)  # distinct indices, uniform over pairs
    return float(np.linalg.norm(features[i] - features[j], axis=1).mean())


def multimodality(features, classes, per_class_pairs=100, rng=None):
    """Mean over classes of the within-class diversity."""
    features = np.asarray(features, dtype=np.float64)
    classes = np.asarray(classes)
    rng = rng or np.random.default_rng(0)
    values = []
    for c in np.unique(classes):
        rows = features[classes == c]
        if rows.shape[0] >= 2:
            values.append(diversity(rows, per_class_pairs, rng))
    if not values:
        raise ValidationError("no class has >= 2 rows")
    return float(np.mean(values))


def accuracy(motions, targets, classifier):
    """Fraction of motions whose predicted class matches the target.

    classifier: callable MotionSequence -> class index.
    """
    if len(motions) == 0:
        raise ValidationError("accuracy needs at least one sample")
    if len(motions) != len(targets):
        raise ValidationError("motions and targets must have equal length")
    hits = sum(int(classifier(m)) == int(t) for m, t in zip(motions, targets))
    return hits / len(motions)


@dataclass
class MetricReport:
    fid: float
    div_gen: float
    div_gt: float
    div_gap: float
    mm: float
    acc: float
    counts: dict
    stds: dict
    seed: int
    extra: dict = None

    def to_dict(self):
        d = {
            "fid": self.fid,
            "div_gen": self.div_gen,
            "div_gt": self.div_gt,
            "div_gap": self.div_gap,
            "mm": self.mm,
            "acc": self.acc,
            "counts": self.counts,
            "stds": self.stds,
            "seed": self.seed,
        }
        if self.extra:
            d.update(self.extra)
        return d

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def bootstrap_std(values_fn, n_rows, repeats=20, rng=None):
    """Std of a statistic over `repeats` row resamples (with replacement)."""
    rng = rng or np.random.default_rng(0)
    vals = []
    for _ in range(repeats):
        idx = rng.integers(0, n_rows, size=n_rows)
        vals.append(values_fn(idx))
    return float(np.std(vals))


def compute_report(
    gen_features,
    gt_features,
    gen_classes,
    correct_flags,
    div_pairs=300,
    mm_pairs=100,
    bootstrap_repeats=20,
    seed=0,
    extra=None,
):
    """Assemble all metrics plus bootstrap standard deviations.

    gen_features / gt_features: (M, D_e) frozen-encoder embeddings;
    gen_classes: condition class per generated row; correct_flags: 1 if the
    frozen classifier matched the condition.
    """
    gen_features = np.asarray(gen_features, dtype=np.float64)
    gt_features = np.asarray(gt_features, dtype=np.float64)
    gen_classes = np.asarray(gen_classes)
    correct = np.asarray(correct_flags, dtype=float)
    rng = np.random.default_rng(seed)

    fid_val = fid(gt_features, gen_features)
    div_gen = diversity(gen_features, div_pairs, np.random.default_rng(seed + 1))
    div_gt = diversity(gt_features, div_pairs, np.random.default_rng(seed + 2))
    mm_val = multimodality(gen_features, gen_classes, mm_pairs, np.random.default_rng(seed + 3))
    acc_val = float(correct.mean())

    M = gen_features.shape[0]
    stds = {
        "fid": bootstrap_std(
            lambda idx: fid(gt_features, gen_features[idx]), M, bootstrap_repeats, rng
        ),
        "div": bootstrap_std(
            lambda idx: diversity(gen_features[idx], div_pairs, np.random.default_rng(seed + 1)),
            M,
            bootstrap_repeats,
            rng,
        ),
        "mm": bootstrap_std(
            lambda idx: multimodality(
                gen_features[idx], gen_classes[idx], mm_pairs, np.random.default_rng(seed + 3)
            ),
            M,
            bootstrap_repeats,
            rng,
        ),
        "acc": bootstrap_std(lambda idx: float(correct[idx].mean()), M, bootstrap_repeats, rng),
    }
    return MetricReport(
        fid=fid_val,
        div_gen=div_gen,
        div_gt=div_gt,
        div_gap=abs(div_gen - div_gt),
        mm=mm_val,
        acc=acc_val,
        counts={"generated": int(M), "ground_truth": int(gt_features.shape[0])},
        stds=stds,
        seed=int(seed),
        extra=extra,
    )
