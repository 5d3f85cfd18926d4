import numpy as np
import pytest
import torch

from ereact.denoiser import DenoiserConfig, ReactionDenoiser
from ereact.diffusion import linear_schedule
from ereact.diffusion_training import (
    DEFAULT_LOSS_WEIGHTS,
    DiffusionTrainConfig,
    feature_range,
    train_diffusion,
)
from ereact.encoder import EmotionEncoder, EncoderConfig
from ereact.prior import EmotionPrior
from ereact.skeleton import EMOTIONS, NUM_EMOTIONS, ValidationError, chain_skeleton
from ereact.synth import generate_pair


def _setup(shared=True, seed=0, n_pairs=6, length=16):
    skel = chain_skeleton(4)
    pairs = [
        generate_pair(EMOTIONS[i % 7], length, 20.0, i, skeleton=skel)
        for i in range(n_pairs)
    ]
    torch.manual_seed(seed)
    enc = EmotionEncoder(
        EncoderConfig(feature_dim=skel.feature_dim, latent_dim=8, layers=1, heads=2, dropout=0.0, max_len=32)
    )
    den = ReactionDenoiser(
        DenoiserConfig(
            feature_dim=skel.feature_dim,
            emotion_dim=8,
            latent_dim=16,
            layers=1,
            heads=2,
            dropout=0.0,
            time_dim=8,
            max_len=32,
            shared_projection=shared,
        )
    )
    rng = np.random.default_rng(seed)
    prior = EmotionPrior(
        means=rng.normal(size=(NUM_EMOTIONS, 8)),
        variances=rng.uniform(0.5, 1.5, size=(NUM_EMOTIONS, 8)),
    )
    schedule = linear_schedule(20)
    return den, pairs, schedule, enc, prior


def test_train_config_validation():
    with pytest.raises(ValidationError):
        DiffusionTrainConfig(condition_mode="nope")
    with pytest.raises(ValidationError):
        DiffusionTrainConfig(architecture="nope")
    with pytest.raises(ValidationError):
        DiffusionTrainConfig(loss_weights={"bogus": 1.0})
    cfg = DiffusionTrainConfig(loss_weights={"foot": 0.0})
    assert cfg.loss_weights["foot"] == 0.0
    assert cfg.loss_weights["rc"] == DEFAULT_LOSS_WEIGHTS["rc"]


def test_architecture_projection_consistency():
    den, pairs, schedule, enc, prior = _setup(shared=True)
    with pytest.raises(ValidationError):
        train_diffusion(den, pairs, schedule, enc, prior, DiffusionTrainConfig(epochs=1, architecture="asymmetric"))
    den2, *_ = _setup(shared=False)
    with pytest.raises(ValidationError):
        train_diffusion(den2, pairs, schedule, enc, prior, DiffusionTrainConfig(epochs=1))


def test_training_runs_and_reduces_loss():
    den, pairs, schedule, enc, prior = _setup()
    cfg = DiffusionTrainConfig(epochs=10, batch_size=3, lr=1e-3, seed=0)
    history = train_diffusion(den, pairs, schedule, enc, prior, cfg)
    assert len(history.epochs) == 10
    assert history.epochs[-1]["loss_total"] < history.epochs[0]["loss_total"]
    keys = set(history.epochs[0])
    assert {"loss_rc", "loss_react", "loss_bone", "loss_smooth", "loss_foot", "loss_emo"} <= keys


def test_training_is_deterministic():
    states = []
    for _ in range(2):
        den, pairs, schedule, enc, prior = _setup(seed=1)
        train_diffusion(den, pairs, schedule, enc, prior, DiffusionTrainConfig(epochs=2, seed=1))
        states.append(den.state_dict())
    for k in states[0]:
        assert torch.equal(states[0][k], states[1][k])


def test_encoder_stays_frozen():
    den, pairs, schedule, enc, prior = _setup()
    before = {k: v.clone() for k, v in enc.state_dict().items()}
    train_diffusion(den, pairs, schedule, enc, prior, DiffusionTrainConfig(epochs=2, seed=0))
    after = enc.state_dict()
    for k in before:
        assert torch.equal(before[k], after[k])


@pytest.mark.parametrize("mode", ["sampled", "centroid", "one-hot"])
def test_condition_modes_run(mode):
    den, pairs, schedule, enc, prior = _setup()
    history = train_diffusion(
        den, pairs, schedule, enc, prior, DiffusionTrainConfig(epochs=1, condition_mode=mode)
    )
    assert np.isfinite(history.epochs[0]["loss_total"])


def test_non_fixed_arm_runs():
    den, pairs, schedule, enc, prior = _setup()
    history = train_diffusion(
        den, pairs, schedule, enc, prior, DiffusionTrainConfig(epochs=1, architecture="non-fixed")
    )
    assert np.isfinite(history.epochs[0]["loss_total"])


def test_asymmetric_arm_runs():
    den, pairs, schedule, enc, prior = _setup(shared=False)
    history = train_diffusion(
        den, pairs, schedule, enc, prior, DiffusionTrainConfig(epochs=1, architecture="asymmetric")
    )
    assert np.isfinite(history.epochs[0]["loss_total"])


def test_zero_weight_skips_term():
    den, pairs, schedule, enc, prior = _setup()
    weights = {k: 0.0 for k in DEFAULT_LOSS_WEIGHTS}
    weights["rc"] = 1.0
    history = train_diffusion(
        den, pairs, schedule, enc, prior, DiffusionTrainConfig(epochs=1, loss_weights=weights)
    )
    rec = history.epochs[0]
    assert rec["loss_react"] == 0.0
    assert rec["loss_emo"] == 0.0


def test_feature_range_covers_reactors():
    _, pairs, *_ = _setup()
    lo, hi = feature_range(pairs)
    frames = np.concatenate([p.reactor.frames for p in pairs])
    assert np.array_equal(lo, frames.min(axis=0))
    assert np.array_equal(hi, frames.max(axis=0))
    assert (lo <= hi).all()


def test_empty_pairs_rejected():
    den, _, schedule, enc, prior = _setup()
    with pytest.raises(ValidationError):
        train_diffusion(den, [], schedule, enc, prior, DiffusionTrainConfig(epochs=1))
