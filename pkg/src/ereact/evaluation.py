"""End-to-end evaluation: generate reactions for the eval split and score
them with the frozen encoder (FID / DIV / MM / ACC + bootstrap stds)."""

import numpy as np

from ereact.encoder import classify_motion, embed_motion
from ereact.metrics import compute_report
from ereact.motion_io import load_pair
from ereact.sampling import GenerationRequest, generate
from ereact.skeleton import EMOTIONS, ValidationError, emotion_index


def evaluate(
    models,
    manifest,
    dataset_root,
    conditions=None,
    max_actors=None,
    sampler="ddim",
    steps=50,
    seed=0,
    div_pairs=300,
    mm_pairs=100,
    bootstrap_repeats=20,
    gt_self=False,
):
    """One generated reaction per eval actor per target condition.

    gt_self=True scores the ground-truth reactions against themselves
    (FID ~ 0; ACC becomes the classifier's eval accuracy).
    """
    entries = manifest.split_entries("eval")
    if not entries:
        raise ValidationError("dataset has no eval split")
    if max_actors is not None:
        entries = entries[:max_actors]
    conditions = list(conditions) if conditions else list(EMOTIONS)

    skeleton = manifest.skeleton
    fps = manifest.fps
    actors, reactors, labels = [], [], []
    for e in entries:
        a, r = load_pair(dataset_root, e, skeleton, fps)
        actors.append(a)
        reactors.append(r)
        labels.append(emotion_index(e.emotion))

    gt_features = np.stack([embed_motion(models.encoder, r) for r in reactors])

    def predict(motion):
        return int(np.argmax(classify_motion(models.encoder, motion)))

    if gt_self:
        gen_features = gt_features.copy()
        gen_classes = np.array(labels)
        correct = [predict(r) == c for r, c in zip(reactors, gen_classes)]
        extra = {"mode": "gt-self"}
    else:
        gen_features, gen_classes, correct = [], [], []
        for i, actor in enumerate(actors):
            for c_name in conditions:
                c = emotion_index(c_name)
                req = GenerationRequest(
                    actor=actor,
                    mode="edited",
                    emotion=c_name,
                    sampler=sampler,
                    steps=steps,
                    seed=int(seed) * 1000003 + i * len(EMOTIONS) + c,
                )
                reaction, _ = generate(req, models)
                gen_features.append(embed_motion(models.encoder, reaction))
                gen_classes.append(c)
                correct.append(predict(reaction) == c)
        gen_features = np.stack(gen_features)
        gen_classes = np.array(gen_classes)
        extra = {"mode": "generated", "sampler": sampler, "steps": steps}

    extra.update(
        {
            "conditions": conditions,
            "eval_actors": len(entries),
            "condition_mode": models.condition_mode,
            "architecture": models.architecture,
        }
    )
    return compute_report(
        gen_features,
        gt_features,
        gen_classes,
        correct,
        div_pairs=div_pairs,
        mm_pairs=mm_pairs,
        bootstrap_repeats=bootstrap_repeats,
        seed=seed,
        extra=extra,
    )
