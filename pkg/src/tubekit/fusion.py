"""Late fusion of per-tube feature channels for action classification.

Each channel gets its own one-vs-rest linear SVM per class, trained with a
deterministic full-batch subgradient schedule. A tube's class score is the
sum over channels of the sigmoid of the channel margin, so it lives
strictly between 0 and the number of channels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, MissingClassError, ParseError
from .geometry import FrameExtent, Tube, temporal_iou
from .evalkit import GroundTruthInstance

__all__ = [
    "TubeFeature",
    "FusionModel",
    "label_training_tubes",
    "train_fusion",
    "score_tube",
    "load_tube_features",
    "save_tube_features",
]

TUBE_POSITIVE_TIOU = 0.5
DEFAULT_SVM_C = 1.0
SVM_EPOCHS = 200
SVM_STEP = 0.1

BACKGROUND = None  # label for tubes that match no ground truth


@dataclass
class TubeFeature:
    """Per-channel feature vectors for one tube, keyed by a stable tube id."""

    tube_id: str
    channels: dict[str, np.ndarray]

    def __post_init__(self):
        if not self.channels:
            raise ValueError("tube feature needs at least one channel")
        self.channels = {
            name: np.asarray(vec, dtype=float).reshape(-1) for name, vec in self.channels.items()
        }


def load_tube_features(path: str | Path) -> list[TubeFeature]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                out.append(
                    TubeFeature(
                        tube_id=str(doc["tube"]),
                        channels={str(k): np.asarray(v, dtype=float) for k, v in doc["channels"].items()},
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ParseError(f"bad tube feature record: {e}", path=str(path), line=lineno) from e
    return out


def save_tube_features(features: Iterable[TubeFeature], path: str | Path) -> None:
    with open(path, "w") as fh:
        for tf in features:
            doc = {
                "tube": tf.tube_id,
                "channels": {k: [float(x) for x in v] for k, v in tf.channels.items()},
            }
            fh.write(json.dumps(doc) + "\n")


def label_training_tubes(
    tubes: Sequence[Tube],
    gts: Sequence[GroundTruthInstance],
    tau: float = TUBE_POSITIVE_TIOU,
    extent: FrameExtent | None = None,
) -> list[str | None]:
    """Assign each tube the class of its best-overlapping ground truth.

    A tube takes the label of the ground-truth instance (same video, any
    class) with the highest temporal IoU, provided that IoU is strictly
    above `tau`; otherwise it is background (None).
    """
    labels: list[str | None] = []
    for tube in tubes:
        best = 0.0
        best_label: str | None = None
        for gt in gts:
            if gt.video != tube.video:
                continue
            t = temporal_iou(tube, gt, extent)
            if t > best:
                best = t
                best_label = gt.label
        labels.append(best_label if best > tau else None)
    return labels


def _train_svm(x: np.ndarray, y: np.ndarray, c: float, epochs: int) -> tuple[np.ndarray, float]:
    """Full-batch subgradient descent on the soft-margin objective.

    Minimizes ||w||^2 / (2c) + mean hinge loss with step 0.1/sqrt(epoch).
    Batch sums make the result independent of example order, and the mean
    makes it invariant to duplicating the whole training set.
    """
    n, d = x.shape
    w = np.zeros(d)
    b = 0.0
    for epoch in range(1, epochs + 1):
        eta = SVM_STEP / math.sqrt(epoch)
        margins = y * (x @ w + b)
        viol = margins < 1.0
        grad_w = w / c - (y[viol] @ x[viol]) / n
        grad_b = -float(y[viol].sum()) / n
        w = w - eta * grad_w
        b = b - eta * grad_b
    return w, b


@dataclass
class FusionModel:
    """Per-channel, per-class linear SVMs plus the channel/class vocabulary."""

    classes: list[str]
    channel_names: list[str]
    weights: dict[str, dict[str, tuple[np.ndarray, float]]]  # channel -> class -> (w, b)
    c: float = DEFAULT_SVM_C

    def margin(self, channel: str, label: str, vec: np.ndarray) -> float:
        w, b = self.weights[channel][label]
        return float(w @ vec + b)

    def to_json_dict(self) -> dict:
        return {
            "classes": self.classes,
            "channels": self.channel_names,
            "c": self.c,
            "weights": {
                ch: {lab: {"w": [float(v) for v in w], "b": float(b)} for lab, (w, b) in per.items()}
                for ch, per in self.weights.items()
            },
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "FusionModel":
        weights = {
            ch: {lab: (np.asarray(rec["w"], dtype=float), float(rec["b"])) for lab, rec in per.items()}
            for ch, per in doc["weights"].items()
        }
        return cls(
            classes=[str(c) for c in doc["classes"]],
            channel_names=[str(c) for c in doc["channels"]],
            weights=weights,
            c=float(doc["c"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FusionModel":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def train_fusion(
    features: Sequence[TubeFeature],
    labels: Sequence[str | None],
    c: float = DEFAULT_SVM_C,
    epochs: int = SVM_EPOCHS,
) -> FusionModel:
    """Train one-vs-rest SVMs per channel for every class seen in `labels`.

    Background tubes (label None) count as negatives for every class. Each
    class needs at least one positive and one negative example.
    """
    if len(features) != len(labels):
        raise ValueError("features and labels must align")
    if not features:
        raise ValueError("no training tubes")
    # Canonical example order: float sums depend on operand order, so sort
    # by content to make training exactly permutation-invariant.
    def _key(i: int):
        tf = features[i]
        blob = b"".join(tf.channels[ch].tobytes() for ch in sorted(tf.channels))
        return (labels[i] or "", blob, tf.tube_id)

    order = sorted(range(len(features)), key=_key)
    features = [features[i] for i in order]
    labels = [labels[i] for i in order]
    channel_names = sorted(features[0].channels)
    for tf in features:
        if sorted(tf.channels) != channel_names:
            raise ValueError(f"tube {tf.tube_id}: channel set differs from the first tube")
    classes = sorted({lab for lab in labels if lab is not None})
    if not classes:
        raise ValueError("all training tubes are background; nothing to train")
    weights: dict[str, dict[str, tuple[np.ndarray, float]]] = {ch: {} for ch in channel_names}
    for label in classes:
        y = np.asarray([1.0 if lab == label else -1.0 for lab in labels])
        if not (y > 0).any():
            raise MissingClassError(label, context="fusion training has no positives")
        if not (y < 0).any():
            raise MissingClassError(label, context="fusion training has no negatives")
        for ch in channel_names:
            x = np.stack([tf.channels[ch] for tf in features])
            weights[ch][label] = _train_svm(x, y, c, epochs)
    return FusionModel(classes=classes, channel_names=channel_names, weights=weights, c=c)


def _sigmoid(v: float) -> float:
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


def score_tube(model: FusionModel, feature: TubeFeature) -> dict[str, float]:
    """Fused per-class scores: sum over channels of sigmoid(channel margin).

    Every model channel must be present on the tube; scores lie strictly
    between 0 and the number of channels.
    """
    for ch in model.channel_names:
        if ch not in feature.channels:
            raise ConfigurationError(f"tube {feature.tube_id}: missing channel {ch!r}")
    scores = {}
    for label in model.classes:
        total = 0.0
        for ch in model.channel_names:
            total += _sigmoid(model.margin(ch, label, feature.channels[ch]))
        scores[label] = total
    return scores
