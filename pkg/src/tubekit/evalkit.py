"""Tube-level evaluation: temporal-IoU matching, AP/mAP, and ablation sweeps."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError
from .geometry import Box, FrameExtent, Tube, temporal_iou
from .provider import DetectionStore
from .regress import FullBodyRegressor
from .tracker import TrackerConfig, extract_tubes

__all__ = [
    "GroundTruthInstance",
    "ScoredTube",
    "EvalCorpus",
    "ap_at",
    "per_class_ap",
    "map_at",
    "pr_curve",
    "ablate_parts",
    "compare_stores",
    "load_groundtruth",
    "save_groundtruth",
]

DEFAULT_TAUS = (0.5, 0.7)


@dataclass
class GroundTruthInstance:
    """One annotated person: video, action class, and per-frame boxes."""

    video: str
    label: str
    frames: list[tuple[int, Box]]

    def __post_init__(self):
        if not self.frames:
            raise ValueError("ground-truth instance needs at least one annotated frame")
        idx = [f for f, _ in self.frames]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"annotated frames must be strictly increasing: {idx}")

    def to_json_dict(self) -> dict:
        return {
            "video": self.video,
            "class": self.label,
            "frames": [{"frame": f, "box": list(b.as_tuple())} for f, b in self.frames],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GroundTruthInstance":
        return cls(
            video=str(doc["video"]),
            label=str(doc["class"]),
            frames=[(int(f["frame"]), Box(*f["box"])) for f in doc["frames"]],
        )


@dataclass
class ScoredTube:
    """A tube claimed for one action class with a confidence."""

    tube: Tube
    label: str
    confidence: float


def load_groundtruth(path: str | Path) -> list[GroundTruthInstance]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(GroundTruthInstance.from_json_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, IndexError, ValueError) as e:
                raise ParseError(f"bad ground-truth record: {e}", path=str(path), line=lineno) from e
    return out


def save_groundtruth(gts: Iterable[GroundTruthInstance], path: str | Path) -> None:
    with open(path, "w") as fh:
        for gt in gts:
            fh.write(json.dumps(gt.to_json_dict()) + "\n")


def _match_ranked(
    scored: Sequence[ScoredTube],
    gts: Sequence[GroundTruthInstance],
    tau: float,
    extent: FrameExtent | None,
) -> list[bool]:
    """Greedy one-to-one matching in confidence order; returns per-rank TP flags.

    Ties in confidence are ordered by video id, then by the tube's first
    frame (the sort is stable beyond that). Each tube may claim the
    still-unmatched ground truth of its video with the highest temporal IoU,
    provided that IoU reaches tau.
    """
    order = sorted(
        range(len(scored)),
        key=lambda i: (-scored[i].confidence, scored[i].tube.video, scored[i].tube.first_frame),
    )
    taken = [False] * len(gts)
    tp_flags = [False] * len(scored)
    for rank, i in enumerate(order):
        st = scored[i]
        best_tiou = 0.0
        best_gt = -1
        for g, gt in enumerate(gts):
            if taken[g] or gt.video != st.tube.video:
                continue
            t = temporal_iou(st.tube, gt, extent)
            if t > best_tiou:
                best_tiou = t
                best_gt = g
        if best_gt >= 0 and best_tiou >= tau:
            taken[best_gt] = True
            tp_flags[rank] = True
    return tp_flags


def _ap_from_flags(tp_flags: Sequence[bool], n_gt: int) -> float:
    """All-point interpolated average precision from ranked TP flags."""
    if n_gt <= 0:
        raise ValueError("n_gt must be positive")
    if not tp_flags:
        return 0.0
    tp = np.cumsum([1.0 if f else 0.0 for f in tp_flags])
    fp = np.cumsum([0.0 if f else 1.0 for f in tp_flags])
    recall = tp / n_gt
    precision = tp / (tp + fp)
    # precision envelope from the right, then area under the PR steps
    for i in range(len(precision) - 2, -1, -1):
        precision[i] = max(precision[i], precision[i + 1])
    ap = 0.0
    prev_recall = 0.0
    for i, flag in enumerate(tp_flags):
        if flag:
            ap += (recall[i] - prev_recall) * precision[i]
            prev_recall = recall[i]
    return float(ap)


def ap_at(
    scored: Sequence[ScoredTube],
    gts: Sequence[GroundTruthInstance],
    label: str,
    tau: float,
    extent: FrameExtent | None = None,
) -> float | None:
    """Average precision for one class at temporal-IoU threshold `tau`.

    Returns None when the class has no ground-truth instances (undefined,
    to be excluded from mAP).
    """
    gts_c = [g for g in gts if g.label == label]
    if not gts_c:
        return None
    dets = [s for s in scored if s.label == label]
    flags = _match_ranked(dets, gts_c, tau, extent)
    return _ap_from_flags(flags, len(gts_c))


def per_class_ap(
    scored: Sequence[ScoredTube],
    gts: Sequence[GroundTruthInstance],
    tau: float,
    labels: Sequence[str] | None = None,
    extent: FrameExtent | None = None,
) -> dict[str, float | None]:
    if labels is None:
        labels = sorted({g.label for g in gts})
    return {label: ap_at(scored, gts, label, tau, extent) for label in labels}


def map_at(
    scored: Sequence[ScoredTube],
    gts: Sequence[GroundTruthInstance],
    tau: float,
    labels: Sequence[str] | None = None,
    extent: FrameExtent | None = None,
) -> float:
    """Unweighted mean AP over classes with at least one ground truth.

    Classes without ground truth have undefined AP; they are excluded with
    a warning rather than counted as zero.
    """
    table = per_class_ap(scored, gts, tau, labels, extent)
    defined = {}
    for label, ap in table.items():
        if ap is None:
            warnings.warn(f"class {label!r} has no ground truth; AP undefined, excluded from mAP")
        else:
            defined[label] = ap
    if not defined:
        raise ValueError("no class has ground-truth instances; mAP undefined")
    return float(np.mean(list(defined.values())))


def pr_curve(
    scored: Sequence[ScoredTube],
    gts: Sequence[GroundTruthInstance],
    label: str,
    tau: float,
    extent: FrameExtent | None = None,
) -> list[tuple[float, float]]:
    """Raw (recall, precision) points in rank order for one class."""
    gts_c = [g for g in gts if g.label == label]
    if not gts_c:
        return []
    dets = [s for s in scored if s.label == label]
    flags = _match_ranked(dets, gts_c, tau, extent)
    tp = 0
    points = []
    for i, flag in enumerate(flags, start=1):
        if flag:
            tp += 1
        points.append((tp / len(gts_c), tp / i))
    return points


@dataclass
class EvalCorpus:
    """Everything needed to rebuild tubes and score them against ground truth."""

    store: DetectionStore
    gts: list[GroundTruthInstance]
    model: FullBodyRegressor | None = None
    extent: FrameExtent | None = None
    tubes_per_video: int = 1

    def video_labels(self) -> dict[str, str]:
        labels: dict[str, str] = {}
        for gt in self.gts:
            labels.setdefault(gt.video, gt.label)
        return labels


def _score_extracted(tubes_by_video: dict[str, list[Tube]], corpus: EvalCorpus) -> list[ScoredTube]:
    """Label extracted tubes with their video's ground-truth class.

    Confidence is the tube's mean per-frame score, so ranking reflects how
    confidently it was tracked. Suited to ablations where classification is
    held fixed and localization quality is the variable under study.
    """
    labels = corpus.video_labels()
    scored = []
    for video in sorted(tubes_by_video):
        if video not in labels:
            continue
        for tube in tubes_by_video[video]:
            conf = float(np.mean([tf.score for tf in tube.frames]))
            scored.append(ScoredTube(tube=tube, label=labels[video], confidence=conf))
    return scored


def _extract_all(corpus: EvalCorpus, config: TrackerConfig) -> dict[str, list[Tube]]:
    out: dict[str, list[Tube]] = {}
    for video in corpus.store.videos():
        out[video] = extract_tubes(
            corpus.store, video, corpus.model, config, max_tubes=corpus.tubes_per_video
        )
    return out


def ablate_parts(
    corpus: EvalCorpus,
    config: TrackerConfig,
    parts_counts: Sequence[int],
    taus: Sequence[float] = DEFAULT_TAUS,
) -> list[dict]:
    """Rebuild tubes for each max_parts setting and report mAP per threshold."""
    rows = []
    for parts in parts_counts:
        cfg = replace(config, max_parts=int(parts))
        tubes = _extract_all(corpus, cfg)
        scored = _score_extracted(tubes, corpus)
        row = {"max_parts": int(parts)}
        for tau in taus:
            row[f"map@{tau:g}"] = map_at(scored, corpus.gts, tau, extent=corpus.extent)
        rows.append(row)
    return rows


def compare_stores(
    variants: dict[str, DetectionStore],
    gts: list[GroundTruthInstance],
    config: TrackerConfig,
    model: FullBodyRegressor | None = None,
    extent: FrameExtent | None = None,
    tubes_per_video: int = 1,
    taus: Sequence[float] = DEFAULT_TAUS,
) -> list[dict]:
    """Evaluate several detection stores against one ground truth.

    Used for the full-body versus visible-extent ablation: the variants
    share scenes and differ only in the stored full-body targets.
    """
    rows = []
    for name in variants:
        corpus = EvalCorpus(
            store=variants[name], gts=gts, model=model, extent=extent, tubes_per_video=tubes_per_video
        )
        tubes = _extract_all(corpus, config)
        scored = _score_extracted(tubes, corpus)
        row = {"variant": name}
        for tau in taus:
            row[f"map@{tau:g}"] = map_at(scored, gts, tau, extent=extent)
        rows.append(row)
    return rows
