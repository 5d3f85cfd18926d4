import json
import os

import numpy as np
import pytest

from ereact.cli import main

pytestmark = pytest.mark.slow


TINY = {
    "dataset": {"labeled": 14, "unlabeled": 7, "eval": 14, "length": 20},
    "prior_training": {"epochs": 2},
    "diffusion_training": {"epochs": 1, "max_pairs": 8},
    "sampling": {"steps": 5},
    "metrics": {"div_pairs": 20, "mm_pairs": 5, "bootstrap": 3, "max_eval_actors": 14, "conditions": ["happiness", "anger"]},
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg_path = root / "cfg.json"
    cfg = dict(TINY)
    cfg["out"] = str(root / "run")
    cfg_path.write_text(json.dumps(cfg))
    assert main(["--config", str(cfg_path), "dataset"]) == 0
    assert main(["--config", str(cfg_path), "train-prior"]) == 0
    assert main(["--config", str(cfg_path), "train-diffusion"]) == 0
    return root, cfg_path


def test_pipeline_artifacts(workspace):
    root, _ = workspace
    run = root / "run"
    for name in [
        "dataset/manifest.json",
        "dataset/labels.hidden.json",
        "encoder.ckpt",
        "prior.json",
        "prior_history.json",
        "denoiser.ckpt",
        "diffusion_history.json",
        "dataset.config.json",
        "train-prior.config.json",
        "train-diffusion.config.json",
    ]:
        assert (run / name).exists(), name


def test_generate_command(workspace):
    root, cfg_path = workspace
    actor = root / "run" / "dataset" / "blobs" / "evl00000_a.emo"
    rc = main(
        ["--config", str(cfg_path), "generate", "--actor", str(actor), "--emotion", "happiness", "--export", "json"]
    )
    assert rc == 0
    gen = root / "run" / "generated"
    assert (gen / "reactor.emo").exists()
    assert (gen / "reactor.json").exists()
    meta = json.loads((gen / "meta.json").read_text())
    assert meta["mode"] == "edited"
    assert meta["class"] == "happiness"


def test_generate_empathetic_and_unconditional(workspace):
    root, cfg_path = workspace
    actor = root / "run" / "dataset" / "blobs" / "evl00001_a.emo"
    out = root / "run" / "gen_emp"
    assert main(
        ["--config", str(cfg_path), "generate", "--actor", str(actor), "--empathetic", "--gen-out", str(out)]
    ) == 0
    assert json.loads((out / "meta.json").read_text())["mode"] == "empathetic"
    out2 = root / "run" / "gen_unc"
    assert main(
        ["--config", str(cfg_path), "generate", "--actor", str(actor), "--unconditional", "--gen-out", str(out2)]
    ) == 0
    assert json.loads((out2 / "meta.json").read_text())["class"] is None


def test_generate_requires_one_mode(workspace):
    root, cfg_path = workspace
    actor = root / "run" / "dataset" / "blobs" / "evl00000_a.emo"
    assert main(["--config", str(cfg_path), "generate", "--actor", str(actor)]) == 2
    assert (
        main(
            ["--config", str(cfg_path), "generate", "--actor", str(actor), "--emotion", "fear", "--empathetic"]
        )
        == 2
    )


def test_evaluate_and_compare(workspace, capsys):
    root, cfg_path = workspace
    assert main(["--config", str(cfg_path), "evaluate"]) == 0
    report = json.loads((root / "run" / "report.json").read_text())
    for key in ["fid", "div_gen", "div_gt", "div_gap", "mm", "acc", "stds", "counts", "seed"]:
        assert key in report
    assert "checkpoints" in report
    assert main(["--config", str(cfg_path), "evaluate", "--gt-self", "--report-name", "gt.json"]) == 0
    gt = json.loads((root / "run" / "gt.json").read_text())
    assert gt["fid"] < 1e-6
    rc = main(
        ["--config", str(cfg_path), "evaluate", "--compare", str(root / "run" / "report.json"), str(root / "run" / "gt.json")]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "delta" in out and "fid" in out


def test_export_command(workspace):
    root, cfg_path = workspace
    motion = root / "run" / "generated" / "reactor.emo"
    dest = root / "run" / "reactor.bvh"
    rc = main(
        ["--config", str(cfg_path), "export", "--motion", str(motion), "--format", "bvh",
         "--export-out", str(dest), "--models", str(root / "run")]
    )
    assert rc == 0
    assert dest.read_text().startswith("HIERARCHY")


def test_exit_code_config_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bogus_key": 1}))
    assert main(["--config", str(bad), "dataset"]) == 2
    assert main(["--config", str(tmp_path / "missing.json"), "dataset"]) == 2


def test_exit_code_missing_artifacts(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"out": str(tmp_path / "empty")}))
    assert main(["--config", str(cfg), "train-diffusion"]) == 3
    assert main(["--config", str(cfg), "evaluate"]) == 3


def test_threads_env_validation(tmp_path, monkeypatch):
    monkeypatch.setenv("EREACT_THREADS", "zebra")
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"out": str(tmp_path / "run")}))
    assert main(["--config", str(cfg), "dataset"]) == 2


def test_seed_and_out_overrides(tmp_path):
    cfg = tmp_path / "c.json"
    payload = dict(TINY)
    payload["dataset"] = dict(TINY["dataset"], labeled=7, unlabeled=1, eval=1)
    cfg.write_text(json.dumps(payload))
    out = tmp_path / "other"
    assert main(["--config", str(cfg), "--seed", "42", "--out", str(out), "dataset"]) == 0
    resolved = json.loads((out / "dataset.config.json").read_text())
    assert resolved["seed"] == 42
    assert resolved["out"] == str(out)
    manifest = json.loads((out / "dataset" / "manifest.json").read_text())
    assert manifest["seed"] == 42
