import itertools
import json

import numpy as np
import pytest

from ereact.motion_io import DatasetManifest, read_sealed_labels
from ereact.skeleton import EMOTIONS, ValidationError
from ereact.synth import (
    MIN_ROOT_DISTANCE,
    STYLES,
    generate_pair,
    make_dataset,
    resample_clips,
)


def test_generate_pair_deterministic():
    a = generate_pair("happiness", 24, 20.0, 7)
    b = generate_pair("happiness", 24, 20.0, 7)
    assert np.array_equal(a.actor.frames, b.actor.frames)
    assert np.array_equal(a.reactor.frames, b.reactor.frames)
    c = generate_pair("happiness", 24, 20.0, 8)
    assert not np.array_equal(a.reactor.frames, c.reactor.frames)


def test_generate_pair_min_root_distance():
    for emo in EMOTIONS:
        pair = generate_pair(emo, 32, 20.0, 3)
        ra = pair.actor.positions()[:, 0]
        rr = pair.reactor.positions()[:, 0]
        dist = np.linalg.norm((ra - rr)[:, [0, 2]], axis=-1)
        assert (dist >= MIN_ROOT_DISTANCE - 1e-6).all()


def test_generate_pair_rejects_short_sequences():
    with pytest.raises(ValidationError):
        generate_pair("fear", 8, 20.0, 0)


def _style_features(motion):
    """Summary statistics that expose the per-emotion style knobs."""
    pos = motion.positions()
    vel = motion.velocities()
    speed = np.linalg.norm(vel, axis=-1).mean()
    travel = np.linalg.norm(pos[-1, 0] - pos[0, 0])
    height = pos[:, 4, 1].mean()  # head height reflects the pitch offset
    return [speed, travel, height]


def test_styles_linearly_separable():
    """A linear classifier on simple kinematic statistics separates the 7
    styles despite the per-sequence jitter."""
    sklearn = pytest.importorskip("sklearn")
    from sklearn.linear_model import LogisticRegression

    X, y = [], []
    for c, emo in enumerate(EMOTIONS):
        for s in range(20):
            pair = generate_pair(emo, 40, 20.0, 1000 * s + c)
            X.append(_style_features(pair.reactor))
            y.append(c)
    X, y = np.asarray(X), np.asarray(y)
    clf = LogisticRegression(max_iter=5000).fit(X, y)
    assert clf.score(X, y) >= 0.9


def test_style_speed_ordering():
    """Faster styles produce faster average motion."""
    def mean_speed(emo):
        vals = []
        for s in range(5):
            pair = generate_pair(emo, 40, 20.0, s)
            vals.append(np.linalg.norm(pair.reactor.velocities(), axis=-1).mean())
        return np.mean(vals)

    assert mean_speed("happiness") > mean_speed("neutral") > mean_speed("sadness")


def test_actor_carries_emotion_style():
    """Actor gestures differ by emotion so empathetic inference has signal."""
    a_happy = generate_pair("happiness", 40, 20.0, 0).actor
    a_sad = generate_pair("sadness", 40, 20.0, 0).actor
    sp_h = np.linalg.norm(a_happy.velocities(), axis=-1).mean()
    sp_s = np.linalg.norm(a_sad.velocities(), axis=-1).mean()
    assert sp_h > sp_s


def test_make_dataset_layout(tmp_path):
    manifest = make_dataset(tmp_path / "ds", labeled=14, unlabeled=7, eval_count=7, length=24, seed=0)
    assert manifest.counts == {"labeled_train": 14, "unlabeled_train": 7, "eval": 7}
    loaded = DatasetManifest.load(tmp_path / "ds")
    assert [e.id for e in loaded.entries] == [e.id for e in manifest.entries]

    lab = loaded.split_entries("labeled_train")
    assert sorted({e.emotion for e in lab}) == sorted(EMOTIONS)
    # labeled and eval splits are balanced over the 7 emotions
    counts = {emo: sum(e.emotion == emo for e in lab) for emo in EMOTIONS}
    assert set(counts.values()) == {2}

    unl = loaded.split_entries("unlabeled_train")
    assert all(e.emotion is None for e in unl)
    hidden = read_sealed_labels(tmp_path / "ds", allow_sealed=True)
    assert sorted(hidden) == sorted(e.id for e in unl)
    assert set(hidden.values()) <= set(EMOTIONS)


def test_make_dataset_deterministic(tmp_path):
    make_dataset(tmp_path / "a", labeled=7, unlabeled=1, eval_count=1, length=20, seed=5)
    make_dataset(tmp_path / "b", labeled=7, unlabeled=1, eval_count=1, length=20, seed=5)
    for name in ["manifest.json", "blobs/lab00003_r.emo"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_resample_clips_pairs_and_lengths():
    pair = generate_pair("anger", 32, 20.0, 1)
    rng = np.random.default_rng(0)
    clips = resample_clips(pair.reactor, 4, 16, rng)
    assert len(clips) == len(list(itertools.combinations(range(4), 2)))
    for c in clips:
        assert c.first.length == c.second.length == 16


def test_resample_clips_validation():
    pair = generate_pair("anger", 20, 20.0, 1)
    rng = np.random.default_rng(0)
    with pytest.raises(ValidationError):
        resample_clips(pair.reactor, 2, 40, rng)
    with pytest.raises(ValidationError):
        resample_clips(pair.reactor, 1, 10, rng)


def test_styles_cover_all_emotions():
    assert sorted(STYLES) == sorted(EMOTIONS)
