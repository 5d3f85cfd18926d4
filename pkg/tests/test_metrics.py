import numpy as np
import pytest

from conftest import random_motion
from ereact.metrics import (
    COV_REG,
    MetricReport,
    accuracy,
    bootstrap_std,
    compute_report,
    diversity,
    fid,
    multimodality,
)
from ereact.skeleton import ValidationError, chain_skeleton


def test_fid_self_is_zero():
    X = np.random.default_rng(0).normal(size=(100, 16))
    assert fid(X, X) < 1e-6


def test_fid_univariate_closed_form():
    """Equal variances, means one apart: FID = (mu_r - mu_g)^2 = 1."""
    real = np.array([[-1.0], [1.0]])  # mean 0, sample var 2
    gen = np.array([[0.0], [2.0]])  # mean 1, sample var 2
    assert abs(fid(real, gen) - 1.0) < 1e-9


def test_fid_univariate_general_formula():
    rng = np.random.default_rng(1)
    real = rng.normal(0.0, 1.0, size=(5000, 1))
    gen = rng.normal(2.0, 3.0, size=(5000, 1))
    m_r, v_r = real.mean(), real.var(ddof=1) + COV_REG
    m_g, v_g = gen.mean(), gen.var(ddof=1) + COV_REG
    closed = (m_r - m_g) ** 2 + v_r + v_g - 2 * np.sqrt(v_r * v_g)
    assert abs(fid(real, gen) - closed) < 1e-9


def test_fid_agrees_with_scipy_brute_force():
    scipy_linalg = pytest.importorskip("scipy.linalg")
    rng = np.random.default_rng(2)
    for _ in range(50):
        real = rng.normal(size=(20, 3)) @ rng.normal(size=(3, 3))
        gen = rng.normal(size=(20, 3)) @ rng.normal(size=(3, 3)) + rng.normal(size=3)
        mu_r, mu_g = real.mean(axis=0), gen.mean(axis=0)
        cov_r = np.cov(real, rowvar=False) + COV_REG * np.eye(3)
        cov_g = np.cov(gen, rowvar=False) + COV_REG * np.eye(3)
        covmean = scipy_linalg.sqrtm(cov_r @ cov_g)
        if np.iscomplexobj(covmean):
            covmean = covmean.real
        brute = ((mu_r - mu_g) ** 2).sum() + np.trace(cov_r + cov_g - 2.0 * covmean)
        assert abs(fid(real, gen) - brute) < 1e-8


def test_fid_requires_two_rows():
    with pytest.raises(ValidationError):
        fid(np.zeros((1, 3)), np.zeros((5, 3)))


def test_diversity_matches_gaussian_expectation():
    """Pairs of iid N(0, I_d) rows are ~ sqrt(2 d) apart."""
    d = 64
    rng = np.random.default_rng(3)
    X = rng.normal(size=(2000, d))
    div = diversity(X, pair_count=5000, rng=np.random.default_rng(0))
    assert abs(div - np.sqrt(2 * d)) / np.sqrt(2 * d) < 0.05


def test_diversity_uses_distinct_indices():
    # two identical rows: only cross-pairs exist, distance always 0
    X = np.zeros((2, 4))
    assert diversity(X, pair_count=50) == 0.0
    X[1] = 1.0
    assert abs(diversity(X, pair_count=50) - 2.0) < 1e-12


def test_diversity_deterministic_with_rng():
    X = np.random.default_rng(4).normal(size=(50, 8))
    a = diversity(X, 100, np.random.default_rng(9))
    b = diversity(X, 100, np.random.default_rng(9))
    assert a == b


def test_multimodality_mean_of_class_diversities():
    rng = np.random.default_rng(5)
    X = np.concatenate([rng.normal(0, 1, size=(30, 4)), rng.normal(10, 1, size=(30, 4))])
    classes = np.array([0] * 30 + [1] * 30)
    mm = multimodality(X, classes, per_class_pairs=200, rng=np.random.default_rng(0))
    # within-class spread only; far smaller than the full-set diversity
    assert mm < diversity(X, 200, np.random.default_rng(0))
    # singleton classes are skipped
    classes2 = classes.copy()
    classes2[0] = 5
    multimodality(X, classes2, per_class_pairs=50, rng=np.random.default_rng(0))
    with pytest.raises(ValidationError):
        multimodality(X[:2], np.array([0, 1]), 10)


def test_accuracy_exact_fraction():
    skel = chain_skeleton(4)
    motions = [random_motion(skel, length=4, seed=i) for i in range(50)]
    targets = [0] * 50
    flips = set(range(43, 50))  # 43 hits out of 50

    def clf(m):
        return 1 if any(m is motions[i] for i in flips) else 0

    assert accuracy(motions, targets, clf) == 0.86


def test_accuracy_validation():
    with pytest.raises(ValidationError):
        accuracy([], [], lambda m: 0)
    with pytest.raises(ValidationError):
        accuracy([1], [0, 1], lambda m: 0)


def test_bootstrap_std_deterministic():
    vals = np.random.default_rng(6).normal(size=100)
    fn = lambda idx: float(vals[idx].mean())
    a = bootstrap_std(fn, 100, 20, np.random.default_rng(1))
    b = bootstrap_std(fn, 100, 20, np.random.default_rng(1))
    assert a == b
    assert a > 0


def test_compute_report_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    gen = rng.normal(size=(40, 8))
    gt = rng.normal(size=(40, 8))
    classes = np.repeat(np.arange(4), 10)
    correct = [True] * 30 + [False] * 10
    report = compute_report(gen, gt, classes, correct, div_pairs=50, mm_pairs=20, bootstrap_repeats=5, seed=3)
    assert report.acc == 0.75
    assert report.div_gap == abs(report.div_gen - report.div_gt)
    assert set(report.stds) == {"fid", "div", "mm", "acc"}
    report.save(tmp_path / "r.json")
    import json

    loaded = json.loads((tmp_path / "r.json").read_text())
    assert loaded["fid"] == report.fid
    assert loaded["counts"]["generated"] == 40


def test_report_is_deterministic():
    rng = np.random.default_rng(8)
    gen = rng.normal(size=(30, 6))
    gt = rng.normal(size=(30, 6))
    classes = np.repeat(np.arange(3), 10)
    correct = [True] * 30
    r1 = compute_report(gen, gt, classes, correct, seed=0, bootstrap_repeats=5)
    r2 = compute_report(gen, gt, classes, correct, seed=0, bootstrap_repeats=5)
    assert r1.to_dict() == r2.to_dict()
