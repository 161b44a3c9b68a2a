"""Class-conditional box regression from part boxes to full-body boxes.

Deltas follow the usual detector parameterization: center offsets
normalized by the part size and log size ratios. Per-class regressors are
solved in closed form (ridge least squares, unregularized intercept);
with no features they reduce to the per-class mean delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import MissingClassError
from .geometry import Box

__all__ = [
    "BoxDeltas",
    "FullBodyRegressor",
    "encode_deltas",
    "decode_deltas",
    "train_regressors",
    "apply_regressor",
    "merge_regressed",
]

DEFAULT_RIDGE_LAMBDA = 1e-4


@dataclass(frozen=True)
class BoxDeltas:
    """Center offsets (normalized by part size) and log size ratios."""

    tx: float
    ty: float
    tw: float
    th: float

    def __post_init__(self):
        vals = (self.tx, self.ty, self.tw, self.th)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"deltas must be finite, got {vals}")

    def as_array(self) -> np.ndarray:
        return np.array([self.tx, self.ty, self.tw, self.th], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "BoxDeltas":
        tx, ty, tw, th = (float(v) for v in arr)
        return cls(tx, ty, tw, th)


def encode_deltas(part: Box, full: Box) -> BoxDeltas:
    """Deltas that map `part` onto `full`."""
    pcx, pcy = part.center
    fcx, fcy = full.center
    return BoxDeltas(
        tx=(fcx - pcx) / part.width,
        ty=(fcy - pcy) / part.height,
        tw=math.log(full.width / part.width),
        th=math.log(full.height / part.height),
    )


def decode_deltas(part: Box, deltas: BoxDeltas) -> Box:
    """Exact inverse of encode_deltas."""
    pcx, pcy = part.center
    cx = pcx + deltas.tx * part.width
    cy = pcy + deltas.ty * part.height
    w = part.width * math.exp(deltas.tw)
    h = part.height * math.exp(deltas.th)
    try:
        return Box.from_center(cx, cy, w, h)
    except ValueError as e:
        raise ValueError(f"decoded box is invalid for deltas {deltas}: {e}") from e


@dataclass
class FullBodyRegressor:
    """Per-class affine regressors from (feature, part box) to full-body deltas.

    weights[class_id] has shape (d + 1, 4); the last row is the intercept.
    """

    weights: dict[int, np.ndarray]
    lam: float = DEFAULT_RIDGE_LAMBDA
    feature_dim: int = 0

    def __post_init__(self):
        if not self.weights:
            raise ValueError("regressor must cover at least one class")
        for cid, w in self.weights.items():
            w = np.asarray(w, dtype=float)
            if w.shape != (self.feature_dim + 1, 4):
                raise ValueError(
                    f"class {cid}: weights shape {w.shape} != ({self.feature_dim + 1}, 4)"
                )
            self.weights[cid] = w

    @property
    def class_ids(self) -> list[int]:
        return sorted(self.weights)

    def to_json_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "d": self.feature_dim,
            "classes": {
                str(cid): [[float(v) for v in row] for row in self.weights[cid]]
                for cid in self.class_ids
            },
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "FullBodyRegressor":
        return cls(
            weights={int(cid): np.asarray(rows, dtype=float) for cid, rows in doc["classes"].items()},
            lam=float(doc["lambda"]),
            feature_dim=int(doc["d"]),
        )


def _design_row(feature, d: int) -> np.ndarray:
    row = np.empty(d + 1, dtype=float)
    if d:
        row[:d] = np.asarray(feature, dtype=float)
    row[d] = 1.0
    return row


def train_regressors(
    labeled: Iterable[tuple[int, Box, Sequence[float], Box]],
    lam: float = DEFAULT_RIDGE_LAMBDA,
    classes: Sequence[int] | None = None,
) -> FullBodyRegressor:
    """Fit one ridge regressor per class from (class_id, part, feature, full) rows.

    The intercept is not regularized, so a feature dimension of zero yields
    the per-class mean delta. When `classes` is given, every listed class
    must appear in the data.
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    by_class: dict[int, list[tuple[Box, np.ndarray, Box]]] = {}
    feature_dim: int | None = None
    for class_id, part, feature, full in labeled:
        feat = np.asarray(feature, dtype=float).reshape(-1)
        if feature_dim is None:
            feature_dim = feat.shape[0]
        elif feat.shape[0] != feature_dim:
            raise ValueError(
                f"inconsistent feature dims: expected {feature_dim}, got {feat.shape[0]}"
            )
        by_class.setdefault(int(class_id), []).append((part, feat, full))
    if not by_class:
        raise ValueError("no training examples")
    if classes is not None:
        for cid in classes:
            if int(cid) not in by_class:
                raise MissingClassError(int(cid), context="regressor training")
    d = int(feature_dim or 0)
    weights: dict[int, np.ndarray] = {}
    reg = np.eye(d + 1) * lam
    reg[d, d] = 0.0  # leave the intercept unregularized
    for cid in sorted(by_class):
        # Canonical row order: float matrix products depend on operand
        # order, so sort by content to make training permutation-invariant.
        rows = sorted(
            by_class[cid],
            key=lambda r: (r[0].as_tuple(), r[1].tobytes(), r[2].as_tuple()),
        )
        x = np.stack([_design_row(feat, d) for _, feat, _ in rows])
        y = np.stack([encode_deltas(part, full).as_array() for part, _, full in rows])
        weights[cid] = np.linalg.solve(x.T @ x + reg, x.T @ y)
    return FullBodyRegressor(weights=weights, lam=lam, feature_dim=d)


def apply_regressor(
    model: FullBodyRegressor, class_id: int, part: Box, feature: Sequence[float] = ()
) -> Box:
    """Regress a part box of a given class to its full-body box."""
    if class_id not in model.weights:
        raise MissingClassError(class_id, context="no trained regressor")
    feat = np.asarray(feature, dtype=float).reshape(-1)
    if feat.shape[0] != model.feature_dim:
        raise ValueError(
            f"feature dim {feat.shape[0]} != regressor dim {model.feature_dim}"
        )
    deltas = BoxDeltas.from_array(_design_row(feat, model.feature_dim) @ model.weights[class_id])
    return decode_deltas(part, deltas)


def merge_regressed(scored_boxes: Sequence[tuple[Box, float]]) -> Box:
    """Score-weighted average of boxes, corner by corner.

    Weights are normalized by their sum, so uniform positive rescaling of
    the scores leaves the result unchanged.
    """
    if not scored_boxes:
        raise ValueError("cannot merge an empty set of boxes")
    for _, score in scored_boxes:
        if score <= 0.0:
            raise ValueError(f"merge weights must be positive, got {score}")
    corners = np.array([box.as_tuple() for box, _ in scored_boxes], dtype=float)
    scores = np.array([score for _, score in scored_boxes], dtype=float)
    # Normalizing first keeps the one-box merge bit-exact (s / s == 1.0).
    weights = scores / scores.sum()
    return Box(*(weights @ corners))
