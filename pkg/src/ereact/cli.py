"""Command-line pipeline: dataset, train-prior, train-diffusion, generate,
evaluate, export.

Exit codes: 0 success, 2 config error, 3 missing/corrupt artifact,
4 numerical failure.
"""

import argparse
import json
import os
import shutil
import sys
from pathlib import Path

import numpy as np
import torch

from ereact import artifacts
from ereact.config import (
    ConfigError,
    dataset_dir,
    resolve_config,
    write_resolved_config,
)
from ereact.checkpoint import file_sha256
from ereact.denoiser import DenoiserConfig, ReactionDenoiser
from ereact.diffusion import linear_schedule
from ereact.diffusion_training import DiffusionTrainConfig, feature_range, train_diffusion
from ereact.encoder import EmotionEncoder, EncoderConfig, NumericalError
from ereact.evaluation import evaluate
from ereact.export import export_motion
from ereact.motion import InteractionPair, MotionSequence
from ereact.motion_io import ArtifactError, DatasetManifest, load_pair, read_motion_blob
from ereact.prior import PriorTrainConfig, fit_prior, train_prior_encoder
from ereact.sampling import GenerationRequest, generate
from ereact.skeleton import EMOTIONS, ValidationError
from ereact.synth import make_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ARTIFACT = 3
EXIT_NUMERICAL = 4


def _setup_threads():
    value = os.environ.get("EREACT_THREADS")
    if value:
        try:
            torch.set_num_threads(max(1, int(value)))
        except ValueError:
            raise ConfigError(f"EREACT_THREADS must be an integer, got {value!r}")


def _load_manifest(cfg):
    return DatasetManifest.load(dataset_dir(cfg))


def _split_motions(manifest, root, split, with_labels):
    """Flatten pairs of a split into single-person samples (both roles)."""
    out = []
    for entry in manifest.split_entries(split):
        actor, reactor = load_pair(root, entry, manifest.skeleton, manifest.fps)
        if with_labels:
            out.append((actor, entry.emotion))
            out.append((reactor, entry.emotion))
        else:
            out.append(actor)
            out.append(reactor)
    return out


def cmd_dataset(cfg, args):
    ds = cfg["dataset"]
    out = dataset_dir(cfg)
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest = make_dataset(
        out,
        labeled=ds["labeled"],
        unlabeled=ds["unlabeled"],
        eval_count=ds["eval"],
        length=ds["length"],
        fps=ds["fps"],
        seed=cfg["seed"],
    )
    write_resolved_config(cfg, cfg["out"], "dataset")
    total = sum(manifest.counts.values())
    print(f"dataset written to {out}")
    print(
        f"sequences: {total} (labeled {manifest.counts['labeled_train']}, "
        f"unlabeled {manifest.counts['unlabeled_train']}, eval {manifest.counts['eval']})"
    )
    return EXIT_OK


def _train_prior_once(cfg, manifest, root, unlabeled_count, supervised_only):
    torch.manual_seed(cfg["seed"])
    enc_cfg = EncoderConfig(feature_dim=manifest.skeleton.feature_dim, **cfg["encoder"])
    encoder = EmotionEncoder(enc_cfg)
    labeled = _split_motions(manifest, root, "labeled_train", with_labels=True)
    eval_set = _split_motions(manifest, root, "eval", with_labels=True)
    unlabeled = []
    if not supervised_only:
        entries = manifest.split_entries("unlabeled_train")
        if unlabeled_count is not None:
            entries = entries[:unlabeled_count]
        for entry in entries:
            a, r = load_pair(root, entry, manifest.skeleton, manifest.fps)
            unlabeled.extend([a, r])
    pt = cfg["prior_training"]
    train_cfg = PriorTrainConfig(
        epochs=pt["epochs"],
        batch_size=pt["batch_size"],
        lr=pt["lr"],
        clips_per_seq=pt["clips_per_seq"],
        clip_len=pt["clip_len"],
        ce_weight=pt["ce_weight"],
        consistency_weight=pt["consistency_weight"],
        seed=cfg["seed"],
        keep_best=pt["keep_best"],
    )
    history = train_prior_encoder(encoder, labeled, unlabeled, train_cfg, eval_set=eval_set)
    accs = [e.get("eval_accuracy") for e in history.epochs if "eval_accuracy" in e]
    best = max(accs) if accs else float("nan")
    return encoder, labeled, unlabeled, history, best


def cmd_train_prior(cfg, args):
    manifest = _load_manifest(cfg)
    root = dataset_dir(cfg)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    pt = cfg["prior_training"]

    counts = [pt["unlabeled_count"]]
    if args.unlabeled_count is not None:
        counts = [int(v) for v in args.unlabeled_count.split(",")]
    supervised_only = args.supervised_only or pt["supervised_only"]

    arms = []
    for count in counts:
        sup = supervised_only or count == 0
        encoder, labeled, unlabeled, history, best = _train_prior_once(
            cfg, manifest, root, count, sup
        )
        arms.append(
            {
                "unlabeled_count": count,
                "supervised_only": sup,
                "best_eval_accuracy": best,
                "encoder": encoder,
                "labeled": labeled,
                "unlabeled": unlabeled,
                "history": history,
            }
        )
        print(
            f"arm unlabeled={'all' if count is None else count} "
            f"supervised_only={sup}: best eval accuracy {best:.3f}"
        )

    chosen = max(arms, key=lambda a: a["best_eval_accuracy"])
    encoder = chosen["encoder"]
    full = [m for m, _ in chosen["labeled"]] + chosen["unlabeled"]
    prior = fit_prior(encoder, chosen["labeled"], full, kmeans_iters=pt["kmeans_iters"])

    artifacts.save_encoder(out / artifacts.ENCODER_FILE, encoder)
    prior.save(out / artifacts.PRIOR_FILE)
    with open(out / "prior_history.json", "w") as fh:
        json.dump(
            {
                "arms": [
                    {
                        "unlabeled_count": a["unlabeled_count"],
                        "supervised_only": a["supervised_only"],
                        "best_eval_accuracy": a["best_eval_accuracy"],
                        "history": a["history"].to_dict(),
                    }
                    for a in arms
                ]
            },
            fh,
            indent=2,
        )
    write_resolved_config(cfg, cfg["out"], "train-prior")
    print(f"encoder + prior written to {out} (eval accuracy {chosen['best_eval_accuracy']:.3f})")
    return EXIT_OK


def cmd_train_diffusion(cfg, args):
    manifest = _load_manifest(cfg)
    root = dataset_dir(cfg)
    out = Path(cfg["out"])
    enc_path = out / artifacts.ENCODER_FILE
    prior_path = out / artifacts.PRIOR_FILE
    for p in (enc_path, prior_path):
        if not p.exists():
            raise ArtifactError(f"missing prior artifact: {p} (run train-prior first)")
    encoder = artifacts.load_encoder(enc_path)
    from ereact.prior import EmotionPrior

    prior = EmotionPrior.load(prior_path)

    dt = cfg["diffusion_training"]
    pairs = []
    for split in ("labeled_train", "unlabeled_train"):
        for entry in manifest.split_entries(split):
            a, r = load_pair(root, entry, manifest.skeleton, manifest.fps)
            pairs.append(InteractionPair(actor=a, reactor=r, emotion=entry.emotion))
    if dt["max_pairs"] is not None:
        pairs = pairs[: dt["max_pairs"]]

    schedule = linear_schedule(
        cfg["diffusion"]["steps"], cfg["diffusion"]["beta_start"], cfg["diffusion"]["beta_end"]
    )
    torch.manual_seed(cfg["seed"])
    den_cfg = DenoiserConfig(
        feature_dim=manifest.skeleton.feature_dim,
        emotion_dim=encoder.config.latent_dim,
        shared_projection=dt["architecture"] != "asymmetric",
        **cfg["denoiser"],
    )
    denoiser = ReactionDenoiser(den_cfg)
    train_cfg = DiffusionTrainConfig(
        epochs=dt["epochs"],
        batch_size=dt["batch_size"],
        lr=dt["lr"],
        seed=cfg["seed"],
        condition_mode=dt["condition_mode"],
        architecture=dt["architecture"],
        loss_weights=dict(dt["loss_weights"]),
    )
    history = train_diffusion(denoiser, pairs, schedule, encoder, prior, train_cfg)
    clamp_lo, clamp_hi = feature_range(pairs)
    artifacts.save_denoiser(
        out / artifacts.DENOISER_FILE,
        denoiser,
        schedule,
        manifest.skeleton,
        manifest.fps,
        clamp_lo,
        clamp_hi,
        dt["condition_mode"],
        dt["architecture"],
    )
    with open(out / "diffusion_history.json", "w") as fh:
        json.dump(history.to_dict(), fh, indent=2)
    write_resolved_config(cfg, cfg["out"], "train-diffusion")
    first, last = history.epochs[0]["loss_total"], history.epochs[-1]["loss_total"]
    print(f"denoiser written to {out} (loss {first:.4f} -> {last:.4f})")
    return EXIT_OK


def cmd_generate(cfg, args):
    models_dir = Path(args.models) if args.models else Path(cfg["out"])
    models = artifacts.load_bundle(models_dir)
    actor = MotionSequence(read_motion_blob(args.actor), models.fps, models.skeleton)

    if args.empathetic:
        mode, emotion = "empathetic", None
    elif args.unconditional:
        mode, emotion = "unconditional", None
    else:
        if args.emotion is None:
            raise ConfigError(
                "choose one of --emotion NAME, --empathetic or --unconditional"
            )
        mode, emotion = "edited", args.emotion

    request = GenerationRequest(
        actor=actor,
        mode=mode,
        emotion=emotion,
        sampler=args.sampler or cfg["sampling"]["sampler"],
        steps=args.steps or cfg["sampling"]["steps"],
        seed=cfg["seed"],
    )
    reactor, metadata = generate(request, models)

    out = Path(args.gen_out or Path(cfg["out"]) / "generated")
    out.mkdir(parents=True, exist_ok=True)
    from ereact.motion_io import write_motion_blob

    write_motion_blob(out / "reactor.emo", reactor.frames)
    shutil.copyfile(args.actor, out / "actor.emo")
    with open(out / "meta.json", "w") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
    if args.export:
        export_motion(reactor, args.export, out / f"reactor.{args.export}")
    write_resolved_config(cfg, cfg["out"], "generate")
    print(f"reaction written to {out} (mode {metadata['mode']}, class {metadata['class']})")
    return EXIT_OK


def _print_report_row(report):
    s = report["stds"]
    print(
        f"FID {report['fid']:.3f}±{s['fid']:.3f}  "
        f"DIV {report['div_gen']:.3f}±{s['div']:.3f} (gt {report['div_gt']:.3f})  "
        f"MM {report['mm']:.3f}±{s['mm']:.3f}  "
        f"ACC {report['acc']:.3f}±{s['acc']:.3f}"
    )


def cmd_evaluate(cfg, args):
    if args.compare:
        a_path, b_path = args.compare
        with open(a_path) as fh:
            a = json.load(fh)
        with open(b_path) as fh:
            b = json.load(fh)
        print(f"{'metric':<10}{'A':>12}{'B':>12}{'delta':>12}")
        for key in ("fid", "div_gen", "div_gt", "div_gap", "mm", "acc"):
            if key in a and key in b:
                print(f"{key:<10}{a[key]:>12.4f}{b[key]:>12.4f}{b[key] - a[key]:>12.4f}")
        return EXIT_OK

    manifest = _load_manifest(cfg)
    models_dir = Path(args.models) if args.models else Path(cfg["out"])
    models = artifacts.load_bundle(models_dir)
    m = cfg["metrics"]
    report = evaluate(
        models,
        manifest,
        dataset_dir(cfg),
        conditions=m["conditions"],
        max_actors=m["max_eval_actors"],
        sampler=cfg["sampling"]["sampler"],
        steps=cfg["sampling"]["steps"],
        seed=cfg["seed"],
        div_pairs=m["div_pairs"],
        mm_pairs=m["mm_pairs"],
        bootstrap_repeats=m["bootstrap"],
        gt_self=args.gt_self,
    )
    report.extra["checkpoints"] = {
        name: file_sha256(models_dir / name)
        for name in (artifacts.ENCODER_FILE, artifacts.DENOISER_FILE)
    }
    report.extra["prior_sha256"] = file_sha256(models_dir / artifacts.PRIOR_FILE)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / (args.report_name or "report.json")
    report.save(report_path)
    write_resolved_config(cfg, cfg["out"], "evaluate")
    _print_report_row(report.to_dict())
    print(f"report written to {report_path}")
    return EXIT_OK


def cmd_export(cfg, args):
    if args.models:
        parts = artifacts.load_denoiser(Path(args.models) / artifacts.DENOISER_FILE)
        skeleton, fps = parts["skeleton"], parts["fps"]
    else:
        manifest = _load_manifest(cfg)
        skeleton, fps = manifest.skeleton, manifest.fps
    motion = MotionSequence(read_motion_blob(args.motion), fps, skeleton)
    export_motion(motion, args.format, args.export_out)
    print(f"exported {args.motion} -> {args.export_out} ({args.format})")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ereact",
        description="Emotion-driven reaction generation pipeline",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="override the run seed")
    parser.add_argument("--out", help="output root directory")
    parser.add_argument("--preset", default="desk", choices=["desk", "paper"])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("dataset", help="generate the synthetic dataset")

    p = sub.add_parser("train-prior", help="train the emotion encoder + prior")
    p.add_argument("--supervised-only", action="store_true")
    p.add_argument(
        "--unlabeled-count",
        help="number of unlabeled sequences, or a comma list to sweep arms",
    )

    sub.add_parser("train-diffusion", help="train the actor-reactor denoiser")

    p = sub.add_parser("generate", help="generate a reaction for an actor file")
    p.add_argument("--actor", required=True, help="actor motion blob")
    p.add_argument("--emotion", choices=list(EMOTIONS))
    p.add_argument("--empathetic", action="store_true")
    p.add_argument("--unconditional", action="store_true")
    p.add_argument("--sampler", choices=["ddpm", "ddim"])
    p.add_argument("--steps", type=int)
    p.add_argument("--models", help="model artifact directory (default: out)")
    p.add_argument("--gen-out", help="output directory for the generated files")
    p.add_argument("--export", choices=["bvh", "json"])

    p = sub.add_parser("evaluate", help="run the metric suite")
    p.add_argument("--gt-self", action="store_true", help="score ground truth against itself")
    p.add_argument("--models", help="model artifact directory (default: out)")
    p.add_argument("--report-name", help="report file name (default report.json)")
    p.add_argument("--compare", nargs=2, metavar=("A", "B"), help="diff two report files")

    p = sub.add_parser("export", help="convert a motion blob to bvh/json")
    p.add_argument("--motion", required=True)
    p.add_argument("--format", required=True, choices=["bvh", "json"])
    p.add_argument("--export-out", required=True)
    p.add_argument("--models", help="take skeleton/fps from this model directory")

    return parser


_COMMANDS = {
    "dataset": cmd_dataset,
    "train-prior": cmd_train_prior,
    "train-diffusion": cmd_train_diffusion,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "export": cmd_export,
}


def _emotion_arg_check(args):
    chosen = sum(
        [
            getattr(args, "emotion", None) is not None,
            bool(getattr(args, "empathetic", False)),
            bool(getattr(args, "unconditional", False)),
        ]
    )
    if chosen > 1:
        raise ConfigError("--emotion, --empathetic and --unconditional are mutually exclusive")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _setup_threads()
        _emotion_arg_check(args)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out"] = args.out
        cfg = resolve_config(args.config, preset=args.preset, overrides=overrides)
        return _COMMANDS[args.command](cfg, args)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArtifactError, FileNotFoundError) as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
