import json

import pytest

from ereact.config import (
    ConfigError,
    DEFAULT_CONFIG,
    dataset_dir,
    resolve_config,
    write_resolved_config,
)


def test_defaults_resolve():
    cfg = resolve_config()
    assert cfg == DEFAULT_CONFIG
    assert cfg is not DEFAULT_CONFIG  # deep copy


def test_paper_preset_scales_up():
    cfg = resolve_config(preset="paper")
    assert cfg["encoder"]["latent_dim"] == 1024
    assert cfg["diffusion"]["steps"] == 1000
    assert cfg["dataset"]["labeled"] == 2000


def test_unknown_preset():
    with pytest.raises(ConfigError):
        resolve_config(preset="huge")


def test_config_file_merging(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"seed": 9, "dataset": {"labeled": 3}}))
    cfg = resolve_config(path)
    assert cfg["seed"] == 9
    assert cfg["dataset"]["labeled"] == 3
    assert cfg["dataset"]["unlabeled"] == DEFAULT_CONFIG["dataset"]["unlabeled"]


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"dataset": {"bogus": 1}}))
    with pytest.raises(ConfigError, match="bogus"):
        resolve_config(path)


def test_invalid_json_and_missing_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{nope")
    with pytest.raises(ConfigError):
        resolve_config(path)
    with pytest.raises(ConfigError):
        resolve_config(tmp_path / "absent.json")


def test_overrides_win(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"seed": 9}))
    cfg = resolve_config(path, overrides={"seed": 11})
    assert cfg["seed"] == 11


def test_write_resolved_config(tmp_path):
    cfg = resolve_config(overrides={"out": str(tmp_path / "run")})
    p = write_resolved_config(cfg, cfg["out"], "dataset")
    assert p.name == "dataset.config.json"
    assert json.loads(p.read_text())["out"] == str(tmp_path / "run")


def test_dataset_dir_resolution(tmp_path):
    cfg = resolve_config(overrides={"out": "runs/x"})
    assert str(dataset_dir(cfg)).endswith("runs/x/dataset")
    cfg["dataset"]["dir"] = str(tmp_path / "abs")
    assert dataset_dir(cfg) == tmp_path / "abs"
