"""Run configuration: nested defaults, JSON loading, strict key checking."""

import copy
import json
from pathlib import Path


class ConfigError(ValueError):
    """Bad configuration file or flags (CLI exit code 2)."""


DEFAULT_CONFIG = {
    "seed": 0,
    "out": "runs/default",
    "dataset": {
        "dir": "dataset",  # resolved under `out` unless absolute
        "labeled": 200,
        "unlabeled": 700,
        "eval": 100,
        "length": 40,
        "fps": 20.0,
    },
    "encoder": {
        "latent_dim": 64,
        "layers": 4,
        "heads": 4,
        "dropout": 0.1,
        "max_len": 96,
    },
    "prior_training": {
        "epochs": 30,
        "batch_size": 16,
        "lr": 1e-3,
        "clips_per_seq": 2,
        "clip_len": None,
        "ce_weight": 1.0,
        "consistency_weight": 1.0,
        "supervised_only": False,
        "unlabeled_count": None,
        "kmeans_iters": 100,
        "keep_best": True,
    },
    "denoiser": {
        "latent_dim": 64,
        "layers": 4,
        "heads": 4,
        "dropout": 0.1,
        "time_dim": 64,
        "max_len": 256,
    },
    "diffusion": {
        "steps": 200,
        "beta_start": 1e-4,
        "beta_end": 5e-2,
    },
    "diffusion_training": {
        "epochs": 60,
        "batch_size": 16,
        "lr": 3e-4,
        "condition_mode": "sampled",
        "architecture": "symmetric-fixed",
        "max_pairs": None,
        "loss_weights": {
            "rc": 1.0,
            "react": 1.0,
            "bone": 1.0,
            "smooth": 1.0,
            "foot": 1.0,
            "emo": 1.0,
        },
    },
    "sampling": {
        "sampler": "ddim",
        "steps": 50,
    },
    "metrics": {
        "div_pairs": 300,
        "mm_pairs": 100,
        "bootstrap": 20,
        "max_eval_actors": None,
        "conditions": None,
    },
}

# paper-scale preset: supplement architecture values, T=1000 schedule,
# full Inter-X-like split sizes
PAPER_PRESET = {
    "dataset": {"labeled": 2000, "unlabeled": 7000, "eval": 500, "length": 64},
    "encoder": {"latent_dim": 1024, "layers": 8, "heads": 8, "dropout": 0.3, "max_len": 256},
    "denoiser": {"latent_dim": 1024, "layers": 8, "heads": 8, "dropout": 0.1},
    "diffusion": {"steps": 1000, "beta_end": 2e-2},
    "prior_training": {"epochs": 500},
}

PRESETS = {"desk": {}, "paper": PAPER_PRESET}


def _merge(base, override, path=""):
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key: {path}{key}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, path=f"{path}{key}.")
        else:
            base[key] = value
    return base


def resolve_config(config_path=None, preset="desk", overrides=None):
    """Defaults <- preset <- config file <- CLI overrides, left to right."""
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    _merge(cfg, copy.deepcopy(PRESETS[preset]))
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config file must contain a JSON object")
        _merge(cfg, user)
    if overrides:
        _merge(cfg, overrides)
    return cfg


def write_resolved_config(cfg, out_dir, command):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{command}.config.json"
    with open(path, "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
    return path


def dataset_dir(cfg):
    d = Path(cfg["dataset"]["dir"])
    return d if d.is_absolute() else Path(cfg["out"]) / d
