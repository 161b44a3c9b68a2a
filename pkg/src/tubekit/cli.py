"""Command-line pipeline: generate data, train models, build and score tubes.

Every subcommand reads defaults from an optional JSON config file
(`--config`, one flat object per subcommand name); explicit flags win over
the config, which wins over built-in defaults. Each run writes a manifest
next to its primary output recording the resolved parameters, a hash of
them, and library versions, but no timestamps, so reruns are comparable
byte for byte. On failure, outputs the run may have partially written are
removed. Exit codes: 0 success, 1 runtime failure, 2 usage or config
error. Set TUBEKIT_LOG to a level name (e.g. DEBUG) for diagnostics.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .amodal import (
    REMOVAL_DIRECTIONS,
    PoseLibrary,
    complete_pose,
    load_pose_library,
    load_poses,
    pose_to_box,
    removal_curve,
    save_poses,
)
from .errors import TubekitError
from .evalkit import (
    EvalCorpus,
    ScoredTube,
    ablate_parts,
    load_groundtruth,
    map_at,
    per_class_ap,
)
from .fusion import (
    FusionModel,
    label_training_tubes,
    load_tube_features,
    score_tube,
    train_fusion,
)
from .geometry import Box, FrameExtent
from .partmodel import (
    PartClassModel,
    assign_class,
    cluster_parts,
    descriptor,
    load_part_class_model,
    load_skeleton,
    save_part_class_model,
    select_positive_proposals,
)
from .provider import load_detections
from .regress import FullBodyRegressor, train_regressors
from .synthgen import (
    FULLBODY_CLASS_ID,
    PART_CLASS_NAMES,
    clean_scenes,
    generate_corpus,
    generate_poses,
    generate_training_set,
    multiclass_scenes,
    multiperson_scenes,
    occlusion_scenes,
    viewpoint_scenes,
)
from .tracker import TrackerConfig, extract_tubes, load_tubes, save_tubes

log = logging.getLogger("tubekit")

PRESETS = {
    "clean": clean_scenes,
    "occlusion": occlusion_scenes,
    "viewpoint": viewpoint_scenes,
    "multiclass": multiclass_scenes,
    "multiperson": multiperson_scenes,
}


class UsageError(Exception):
    """Bad flags or config; maps to exit code 2."""


def _parse_scales(text: str) -> tuple[float, ...]:
    try:
        scales = tuple(float(v) for v in str(text).split(","))
    except ValueError:
        raise UsageError(f"bad scales {text!r}; expected comma-separated floats")
    if not scales:
        raise UsageError("scales must not be empty")
    return scales


def _parse_extent(text: str) -> FrameExtent:
    parts = str(text).lower().split("x")
    if len(parts) != 2:
        raise UsageError(f"bad extent {text!r}; expected WIDTHxHEIGHT")
    try:
        return FrameExtent(int(parts[0]), int(parts[1]))
    except ValueError:
        raise UsageError(f"bad extent {text!r}; expected WIDTHxHEIGHT")


def _parse_taus(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in str(text).split(","))
    except ValueError:
        raise UsageError(f"bad taus {text!r}; expected comma-separated floats")


def _load_config(path: str | None, command: str) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    section = doc.get(command, {})
    if not isinstance(section, dict):
        raise UsageError(f"config section {command!r} must be an object")
    return section


def _merge(args: argparse.Namespace, config: dict, defaults: dict) -> dict:
    """Flag > config file > default, per key of `defaults`."""
    for key in config:
        if key not in defaults:
            raise UsageError(f"unknown config key {key!r}")
    merged = dict(defaults)
    merged.update(config)
    for key in defaults:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    return merged


def _config_hash(params: dict) -> str:
    canon = json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()


def _write_manifest(primary_out: Path, command: str, params: dict) -> Path:
    manifest = {
        "command": command,
        "parameters": {k: params[k] for k in sorted(params)},
        "config_hash": _config_hash(params),
        "versions": {
            "tubekit": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }
    if primary_out.is_dir():
        path = primary_out / "run_manifest.json"
    else:
        path = primary_out.with_name(primary_out.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def _dump_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


class _Run:
    """Tracks output paths so a failed run can clean up after itself."""

    def __init__(self):
        self.outputs: list[Path] = []

    def out(self, path: str | Path) -> Path:
        p = Path(path)
        if p.parent and not p.parent.exists():
            p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(p)
        return p

    def out_dir(self, path: str | Path) -> Path:
        p = Path(path)
        p.mkdir(parents=True, exist_ok=True)
        self.outputs.append(p)
        return p

    def cleanup(self) -> None:
        for p in reversed(self.outputs):
            try:
                if p.is_dir():
                    for child in sorted(p.rglob("*"), reverse=True):
                        if child.is_file():
                            child.unlink()
                        else:
                            child.rmdir()
                    p.rmdir()
                elif p.exists():
                    p.unlink()
            except OSError:
                pass


def _require_inputs(params: dict, *keys: str) -> None:
    """Missing input paths are a usage error, caught before any output exists."""
    for key in keys:
        value = params.get(key)
        if value is None:
            continue
        if not Path(value).exists():
            raise UsageError(f"--{key.replace('_', '-')}: no such file: {value}")


def _load_corpus_dir(path: str) -> dict:
    root = Path(path)
    manifest_path = root / "corpus.json"
    if not manifest_path.exists():
        raise UsageError(f"{root} is not a corpus directory (no corpus.json)")
    manifest = json.loads(manifest_path.read_text())
    store = load_detections(root / "detections.jsonl")
    gts = load_groundtruth(root / "groundtruth.jsonl")
    extent = FrameExtent(int(manifest["extent"][0]), int(manifest["extent"][1]))
    return {"root": root, "manifest": manifest, "store": store, "gts": gts, "extent": extent}


def _tracker_config(params: dict) -> TrackerConfig:
    scales = params["scales"]
    if isinstance(scales, str):
        scales = _parse_scales(scales)
    return TrackerConfig(
        max_parts=int(params["max_parts"]),
        spawn_threshold=float(params["spawn_threshold"]),
        prune_threshold=float(params["prune_threshold"]),
        keyframe_stride=int(params["keyframe_stride"]),
        scales=tuple(float(s) for s in scales),
    )


# ---------------------------------------------------------------- commands


def _cmd_synth(args, run: _Run) -> int:
    defaults = {
        "preset": "clean",
        "videos": 10,
        "frames": 0,  # 0 means the preset default
        "seed": 0,
        "fullbody_mode": "amodal",
        "out": None,
        "pose_library": 0,
        "eval_poses": 0,
        "training_instances": 0,
    }
    params = _merge(args, _load_config(args.config, "synth"), defaults)
    if params["out"] is None:
        raise UsageError("synth requires --out")
    if params["preset"] not in PRESETS:
        raise UsageError(f"unknown preset {params['preset']!r}; choose from {sorted(PRESETS)}")
    builder = PRESETS[params["preset"]]
    kwargs = {}
    if int(params["frames"]) > 0:
        kwargs["n_frames"] = int(params["frames"])
    if params["preset"] == "occlusion":
        kwargs["fullbody_mode"] = params["fullbody_mode"]
    elif params["fullbody_mode"] != "amodal":
        raise UsageError("--fullbody-mode applies to the occlusion preset only")
    scenes = builder(int(params["seed"]), int(params["videos"]), **kwargs)
    corpus = generate_corpus(scenes, int(params["seed"]))
    outdir = run.out_dir(params["out"])
    corpus.write(outdir)
    seed = int(params["seed"])
    if int(params["pose_library"]) > 0:
        poses = generate_poses(seed + 1, int(params["pose_library"]))
        save_poses(poses, run.out(outdir / "pose_library.jsonl"))
    if int(params["eval_poses"]) > 0:
        poses = generate_poses(seed + 2, int(params["eval_poses"]))
        save_poses(poses, run.out(outdir / "eval_poses.jsonl"))
    if int(params["training_instances"]) > 0:
        poses, proposals = generate_training_set(seed + 3, int(params["training_instances"]))
        save_poses(poses, run.out(outdir / "training_poses.jsonl"))
        with open(run.out(outdir / "training_proposals.jsonl"), "w") as fh:
            for idx, box in proposals:
                fh.write(json.dumps({"instance": idx, "box": list(box.as_tuple())}) + "\n")
    _write_manifest(outdir, "synth", params)
    print(
        f"synth: wrote {len(corpus.scenes)} videos, "
        f"{sum(len(corpus.store.at(v, f)) for v in corpus.store.videos() for f in corpus.store.frames(v))} detections to {outdir}"
    )
    return 0


def _load_proposals(path: str) -> dict[int, list[Box]]:
    by_instance: dict[int, list[Box]] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            b = doc["box"]
            by_instance.setdefault(int(doc["instance"]), []).append(Box(*(float(v) for v in b)))
    return by_instance


def _cmd_cluster_parts(args, run: _Run) -> int:
    defaults = {
        "poses": None,
        "proposals": None,
        "skeleton": None,
        "k": 20,
        "seed": 0,
        "margin": 20.0,
        "max_iter": 300,
        "out": None,
    }
    params = _merge(args, _load_config(args.config, "cluster-parts"), defaults)
    for key in ("poses", "proposals", "skeleton", "out"):
        if params[key] is None:
            raise UsageError(f"cluster-parts requires --{key}")
    _require_inputs(params, "poses", "proposals", "skeleton")
    skeleton = load_skeleton(params["skeleton"])
    poses = load_poses(params["poses"])
    proposals = _load_proposals(params["proposals"])
    descs = []
    n_considered = 0
    for idx, pose in enumerate(poses):
        boxes = proposals.get(idx, [])
        n_considered += len(boxes)
        gt = pose_to_box(pose, float(params["margin"]))
        flags = select_positive_proposals(boxes, gt, pose, skeleton)
        for box, keep in zip(boxes, flags):
            if keep:
                descs.append(descriptor(box, gt))
    if len(descs) < int(params["k"]):
        raise TubekitError(
            f"only {len(descs)} positive proposals; need at least k={params['k']}"
        )
    centroids = cluster_parts(descs, int(params["k"]), seed=int(params["seed"]), max_iter=int(params["max_iter"]))
    model = PartClassModel(k=int(params["k"]), centroids=centroids)
    out = run.out(params["out"])
    save_part_class_model(model, out)
    _write_manifest(out, "cluster-parts", params)
    print(f"cluster-parts: {len(descs)}/{n_considered} proposals positive, k={params['k']} -> {out}")
    return 0


def _cmd_label_proposals(args, run: _Run) -> int:
    defaults = {"model": None, "poses": None, "proposals": None, "margin": 20.0, "out": None}
    params = _merge(args, _load_config(args.config, "label-proposals"), defaults)
    for key in ("model", "poses", "proposals", "out"):
        if params[key] is None:
            raise UsageError(f"label-proposals requires --{key}")
    _require_inputs(params, "model", "poses", "proposals")
    model = load_part_class_model(params["model"])
    poses = load_poses(params["poses"])
    proposals = _load_proposals(params["proposals"])
    out = run.out(params["out"])
    counts = {"fullbody": 0, "part": 0, "negative": 0}
    with open(out, "w") as fh:
        for idx, pose in enumerate(poses):
            gt = pose_to_box(pose, float(params["margin"]))
            for box in proposals.get(idx, []):
                label = assign_class(box, gt, model)
                counts[label.kind] += 1
                fh.write(
                    json.dumps(
                        {
                            "instance": idx,
                            "box": list(box.as_tuple()),
                            "kind": label.kind,
                            "class": label.class_id,
                        }
                    )
                    + "\n"
                )
    _write_manifest(out, "label-proposals", params)
    print(
        "label-proposals: "
        f"{counts['fullbody']} fullbody, {counts['part']} part, {counts['negative']} negative -> {out}"
    )
    return 0


def _cmd_train_regressors(args, run: _Run) -> int:
    defaults = {
        "corpus": None,
        "ridge_lambda": 1e-4,
        "intercept_only": False,
        "min_overlap": 0.1,
        "out": None,
    }
    params = _merge(args, _load_config(args.config, "train-regressors"), defaults)
    for key in ("corpus", "out"):
        if params[key] is None:
            raise UsageError(f"train-regressors requires --{key}")
    corpus = _load_corpus_dir(params["corpus"])
    tubes = load_tubes(corpus["root"] / "gt_tubes.jsonl")
    per_video = corpus["manifest"].get("tubes_per_video", {})
    if any(int(n) != 1 for n in per_video.values()):
        raise TubekitError("train-regressors needs a single-person corpus")
    gt_by_video = {t.video: t for t in tubes}
    from .geometry import iou as _iou

    store = corpus["store"]
    intercept_only = bool(params["intercept_only"])
    feature_dim = 0
    if not intercept_only:
        feature_dim = int(corpus["manifest"].get("feature_dim", 0))
    exemplar_feat = np.zeros(feature_dim)
    labeled = []
    for video in store.videos():
        tube = gt_by_video.get(video)
        if tube is None:
            continue
        for frame in store.frames(video):
            gt_box = tube.box_at(frame)
            if gt_box is None:
                continue
            for det in store.at(video, frame):
                if _iou(det.box, gt_box) < float(params["min_overlap"]):
                    continue  # stray false positives train nothing
                feat = exemplar_feat if intercept_only else det.feature
                labeled.append((det.class_id, det.box, feat, gt_box))
            # the exact target is itself a training point with zero deltas
            labeled.append((FULLBODY_CLASS_ID, gt_box, exemplar_feat, gt_box))
    model = train_regressors(
        labeled,
        lam=float(params["ridge_lambda"]),
        classes=range(len(PART_CLASS_NAMES)),
    )
    out = run.out(params["out"])
    with open(out, "w") as fh:
        json.dump(model.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(out, "train-regressors", params)
    print(f"train-regressors: {len(labeled)} examples over {len(model.class_ids)} classes -> {out}")
    return 0


def _cmd_complete_pose(args, run: _Run) -> int:
    defaults = {"library": None, "skeleton": None, "poses": None, "margin": 20.0, "out": None}
    params = _merge(args, _load_config(args.config, "complete-pose"), defaults)
    for key in ("library", "skeleton", "poses", "out"):
        if params[key] is None:
            raise UsageError(f"complete-pose requires --{key}")
    _require_inputs(params, "library", "skeleton", "poses")
    skeleton = load_skeleton(params["skeleton"])
    library = load_pose_library(params["library"], skeleton)
    queries = load_poses(params["poses"])
    out = run.out(params["out"])
    with open(out, "w") as fh:
        for query in queries:
            result = complete_pose(query, library)
            box = pose_to_box(result.pose, float(params["margin"]))
            fh.write(
                json.dumps(
                    {
                        "joints": [[float(x), float(y)] for x, y in result.pose.xy],
                        "box": list(box.as_tuple()),
                        "library_index": result.library_index,
                        "scale": result.scale,
                        "distance": result.distance,
                    }
                )
                + "\n"
            )
    _write_manifest(out, "complete-pose", params)
    print(f"complete-pose: completed {len(queries)} poses -> {out}")
    return 0


def _cmd_keypoint_ablation(args, run: _Run) -> int:
    defaults = {
        "library": None,
        "skeleton": None,
        "eval_poses": None,
        "direction": "all",
        "margin": 20.0,
        "max_removed": 0,  # 0 means every feasible count
        "out": None,
    }
    params = _merge(args, _load_config(args.config, "keypoint-ablation"), defaults)
    for key in ("library", "skeleton", "eval_poses", "out"):
        if params[key] is None:
            raise UsageError(f"keypoint-ablation requires --{key}")
    _require_inputs(params, "library", "skeleton", "eval_poses")
    directions = REMOVAL_DIRECTIONS if params["direction"] == "all" else (params["direction"],)
    for d in directions:
        if d not in REMOVAL_DIRECTIONS:
            raise UsageError(f"unknown direction {d!r}; choose from {REMOVAL_DIRECTIONS} or 'all'")
    skeleton = load_skeleton(params["skeleton"])
    library = load_pose_library(params["library"], skeleton)
    eval_poses = load_poses(params["eval_poses"])
    max_removed = int(params["max_removed"]) or None
    curves = {}
    for d in directions:
        rows = removal_curve(library, eval_poses, d, margin=float(params["margin"]), max_removed=max_removed)
        curves[d] = [{"visible": v, "mean_iou": m} for v, m in rows]
    out = run.out(params["out"])
    _dump_json(out, {"margin": float(params["margin"]), "curves": curves})
    _write_manifest(out, "keypoint-ablation", params)
    print(f"keypoint-ablation: {len(directions)} direction(s), {len(eval_poses)} poses -> {out}")
    return 0


def _cmd_build_tubes(args, run: _Run) -> int:
    defaults = {
        "corpus": None,
        "regressors": None,
        "max_parts": 5,
        "spawn_threshold": 0.25,
        "prune_threshold": 1.0,
        "keyframe_stride": 5,
        "scales": "0.9,1.0,1.1",
        "max_tubes": 0,  # 0 means the corpus tubes_per_video
        "out": None,
    }
    params = _merge(args, _load_config(args.config, "build-tubes"), defaults)
    for key in ("corpus", "out"):
        if params[key] is None:
            raise UsageError(f"build-tubes requires --{key}")
    _require_inputs(params, "regressors")
    corpus = _load_corpus_dir(params["corpus"])
    model = None
    if params["regressors"]:
        model = FullBodyRegressor.from_json_dict(json.loads(Path(params["regressors"]).read_text()))
    config = _tracker_config(params)
    per_video = corpus["manifest"].get("tubes_per_video", {})
    tubes = []
    for video in corpus["store"].videos():
        n = int(params["max_tubes"]) or int(per_video.get(video, 1))
        tubes.extend(extract_tubes(corpus["store"], video, model, config, max_tubes=n))
    out = run.out(params["out"])
    save_tubes(tubes, out)
    _write_manifest(out, "build-tubes", params)
    print(f"build-tubes: {len(tubes)} tubes from {len(corpus['store'].videos())} videos -> {out}")
    return 0


def _tube_ids(tubes) -> list[str]:
    counters: dict[str, int] = {}
    ids = []
    for tube in tubes:
        i = counters.get(tube.video, 0)
        counters[tube.video] = i + 1
        ids.append(f"{tube.video}:t{i}")
    return ids


def _cmd_classify(args, run: _Run) -> int:
    defaults = {
        "tubes": None,
        "features": None,
        "groundtruth": None,
        "tau": 0.5,
        "svm_c": 1.0,
        "extent": None,
        "model": None,
        "model_out": None,
        "out": None,
    }
    params = _merge(args, _load_config(args.config, "classify"), defaults)
    for key in ("tubes", "features", "out"):
        if params[key] is None:
            raise UsageError(f"classify requires --{key}")
    _require_inputs(params, "tubes", "features", "groundtruth", "model")
    tubes = load_tubes(params["tubes"])
    if not tubes:
        raise TubekitError(f"no tubes in {params['tubes']}")
    features = {tf.tube_id: tf for tf in load_tube_features(params["features"])}
    ids = _tube_ids(tubes)
    missing = [tid for tid in ids if tid not in features]
    if missing:
        raise TubekitError(f"features missing for tubes: {', '.join(missing[:5])}")
    extent = _parse_extent(params["extent"]) if params["extent"] else None
    if params["model"]:
        model = FusionModel.load(params["model"])
    else:
        if params["groundtruth"] is None:
            raise UsageError("classify needs --groundtruth to train (or --model to reuse one)")
        gts = load_groundtruth(params["groundtruth"])
        labels = label_training_tubes(tubes, gts, tau=float(params["tau"]), extent=extent)
        model = train_fusion([features[tid] for tid in ids], labels, c=float(params["svm_c"]))
    if params["model_out"]:
        model.save(run.out(params["model_out"]))
    out = run.out(params["out"])
    with open(out, "w") as fh:
        for tid in ids:
            scores = score_tube(model, features[tid])
            fh.write(json.dumps({"tube": tid, "scores": scores}, sort_keys=True) + "\n")
    _write_manifest(out, "classify", params)
    print(f"classify: scored {len(ids)} tubes over {len(model.classes)} classes -> {out}")
    return 0


def _cmd_evaluate(args, run: _Run) -> int:
    defaults = {
        "tubes": None,
        "scores": None,
        "groundtruth": None,
        "taus": "0.5,0.7",
        "extent": None,
        "out": None,
    }
    params = _merge(args, _load_config(args.config, "evaluate"), defaults)
    for key in ("tubes", "groundtruth", "out"):
        if params[key] is None:
            raise UsageError(f"evaluate requires --{key}")
    _require_inputs(params, "tubes", "scores", "groundtruth")
    tubes = load_tubes(params["tubes"])
    gts = load_groundtruth(params["groundtruth"])
    taus = _parse_taus(params["taus"]) if isinstance(params["taus"], str) else tuple(params["taus"])
    extent = _parse_extent(params["extent"]) if params["extent"] else None
    scored: list[ScoredTube] = []
    if params["scores"]:
        by_id = {}
        with open(params["scores"]) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    doc = json.loads(line)
                    by_id[doc["tube"]] = doc["scores"]
        for tid, tube in zip(_tube_ids(tubes), tubes):
            if tid not in by_id:
                raise TubekitError(f"no scores for tube {tid}")
            for label, conf in by_id[tid].items():
                scored.append(ScoredTube(tube=tube, label=label, confidence=float(conf)))
    else:
        # no classifier scores: rank by tracking score under the video's label
        video_labels = {}
        for gt in gts:
            video_labels.setdefault(gt.video, gt.label)
        for tube in tubes:
            if tube.video not in video_labels:
                continue
            conf = float(np.mean([tf.score for tf in tube.frames]))
            scored.append(ScoredTube(tube=tube, label=video_labels[tube.video], confidence=conf))
    metrics = {"map": {}, "per_class": {}, "n_tubes": len(tubes), "n_groundtruth": len(gts)}
    for tau in taus:
        key = f"{tau:g}"
        metrics["per_class"][key] = per_class_ap(scored, gts, tau, extent=extent)
        metrics["map"][key] = map_at(scored, gts, tau, extent=extent)
    out = run.out(params["out"])
    _dump_json(out, metrics)
    _write_manifest(out, "evaluate", params)
    summary = ", ".join(f"mAP@{k}={v:.4f}" for k, v in metrics["map"].items())
    print(f"evaluate: {summary} -> {out}")
    return 0


def _cmd_ablate(args, run: _Run) -> int:
    defaults = {
        "corpus": None,
        "regressors": None,
        "parts": "1,2,3,4,5",
        "taus": "0.5,0.7",
        "spawn_threshold": 0.25,
        "prune_threshold": 1.0,
        "keyframe_stride": 5,
        "scales": "0.9,1.0,1.1",
        "max_parts": 5,  # unused by the sweep; present for config parity
        "out": None,
    }
    params = _merge(args, _load_config(args.config, "ablate"), defaults)
    for key in ("corpus", "out"):
        if params[key] is None:
            raise UsageError(f"ablate requires --{key}")
    _require_inputs(params, "regressors")
    corpus = _load_corpus_dir(params["corpus"])
    model = None
    if params["regressors"]:
        model = FullBodyRegressor.from_json_dict(json.loads(Path(params["regressors"]).read_text()))
    parts = (
        tuple(int(v) for v in params["parts"].split(","))
        if isinstance(params["parts"], str)
        else tuple(int(v) for v in params["parts"])
    )
    taus = _parse_taus(params["taus"]) if isinstance(params["taus"], str) else tuple(params["taus"])
    per_video = corpus["manifest"].get("tubes_per_video", {})
    tubes_per_video = max((int(n) for n in per_video.values()), default=1)
    eval_corpus = EvalCorpus(
        store=corpus["store"],
        gts=corpus["gts"],
        model=model,
        extent=corpus["extent"],
        tubes_per_video=tubes_per_video,
    )
    rows = ablate_parts(eval_corpus, _tracker_config(params), parts, taus=taus)
    out = run.out(params["out"])
    _dump_json(out, {"rows": rows})
    _write_manifest(out, "ablate", params)
    for row in rows:
        cells = ", ".join(f"{k}={v:.4f}" for k, v in row.items() if k != "max_parts")
        print(f"ablate: max_parts={row['max_parts']}: {cells}")
    return 0


# ---------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file with per-command sections")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tubekit", description="Synthetic-video tube extraction pipeline"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    _add_common(p)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--videos", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--fullbody-mode", dest="fullbody_mode", choices=["amodal", "visible"])
    p.add_argument("--pose-library", dest="pose_library", type=int, help="also write N library poses")
    p.add_argument("--eval-poses", dest="eval_poses", type=int, help="also write N evaluation poses")
    p.add_argument(
        "--training-instances",
        dest="training_instances",
        type=int,
        help="also write a part-labeling training set of N instances",
    )
    p.add_argument("--out")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("cluster-parts", help="cluster part descriptors into classes")
    _add_common(p)
    p.add_argument("--poses")
    p.add_argument("--proposals")
    p.add_argument("--skeleton")
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--margin", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_cluster_parts)

    p = sub.add_parser("label-proposals", help="band proposals into class labels")
    _add_common(p)
    p.add_argument("--model")
    p.add_argument("--poses")
    p.add_argument("--proposals")
    p.add_argument("--margin", type=float)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_label_proposals)

    p = sub.add_parser("train-regressors", help="fit part-to-full-body box regressors")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--ridge-lambda", dest="ridge_lambda", type=float)
    p.add_argument(
        "--intercept-only",
        dest="intercept_only",
        action="store_const",
        const=True,
        help="ignore detection features; learn per-class mean deltas",
    )
    p.add_argument("--min-overlap", dest="min_overlap", type=float)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_train_regressors)

    p = sub.add_parser("complete-pose", help="fill in missing joints from a pose library")
    _add_common(p)
    p.add_argument("--library")
    p.add_argument("--skeleton")
    p.add_argument("--poses")
    p.add_argument("--margin", type=float)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_complete_pose)

    p = sub.add_parser("keypoint-ablation", help="box recovery as joints are removed")
    _add_common(p)
    p.add_argument("--library")
    p.add_argument("--skeleton")
    p.add_argument("--eval-poses", dest="eval_poses")
    p.add_argument("--direction")
    p.add_argument("--margin", type=float)
    p.add_argument("--max-removed", dest="max_removed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_keypoint_ablation)

    p = sub.add_parser("build-tubes", help="extract tubes from corpus detections")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--regressors")
    p.add_argument("--max-parts", dest="max_parts", type=int)
    p.add_argument("--spawn-threshold", dest="spawn_threshold", type=float)
    p.add_argument("--prune-threshold", dest="prune_threshold", type=float)
    p.add_argument("--keyframe-stride", dest="keyframe_stride", type=int)
    p.add_argument("--scales")
    p.add_argument("--max-tubes", dest="max_tubes", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_build_tubes)

    p = sub.add_parser("classify", help="train or apply the channel-fusion classifier")
    _add_common(p)
    p.add_argument("--tubes")
    p.add_argument("--features")
    p.add_argument("--groundtruth")
    p.add_argument("--tau", type=float)
    p.add_argument("--svm-c", dest="svm_c", type=float)
    p.add_argument("--extent")
    p.add_argument("--model", help="reuse a trained fusion model instead of training")
    p.add_argument("--model-out", dest="model_out")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("evaluate", help="AP/mAP of tubes against ground truth")
    _add_common(p)
    p.add_argument("--tubes")
    p.add_argument("--scores")
    p.add_argument("--groundtruth")
    p.add_argument("--taus")
    p.add_argument("--extent")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ablate", help="sweep the tracked-part budget")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--regressors")
    p.add_argument("--parts")
    p.add_argument("--taus")
    p.add_argument("--spawn-threshold", dest="spawn_threshold", type=float)
    p.add_argument("--prune-threshold", dest="prune_threshold", type=float)
    p.add_argument("--keyframe-stride", dest="keyframe_stride", type=int)
    p.add_argument("--scales")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_ablate)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("TUBEKIT_LOG", "WARNING").upper(),
        format="%(name)s %(levelname)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    run = _Run()
    try:
        return args.func(args, run)
    except UsageError as exc:
        run.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TubekitError, ValueError, KeyError, OSError) as exc:
        run.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
