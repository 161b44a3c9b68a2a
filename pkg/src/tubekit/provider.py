"""Detection storage and queries backing the tracker.

Detections are precomputed per video frame and carry a part class, a
confidence score, an appearance feature, and optionally the detector's own
full-body estimate. Queries are deterministic: ties keep the first record
in file order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import ConfigurationError, ParseError
from .geometry import Box, Tube, iou
from .regress import FullBodyRegressor, apply_regressor

__all__ = [
    "Detection",
    "DetectionStore",
    "load_detections",
    "save_detections",
    "query_score",
    "query_fullbody",
]

MATCH_IOU_THRESHOLD = 0.5


@dataclass
class Detection:
    """One stored part detection."""

    video: str
    frame: int
    class_id: int
    box: Box
    score: float
    feature: np.ndarray
    fullbody: Box | None = None

    def __post_init__(self):
        self.feature = np.asarray(self.feature, dtype=float).reshape(-1)
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"detection score must be in [0, 1], got {self.score}")
        if self.class_id < 0:
            raise ValueError(f"class id must be >= 0, got {self.class_id}")

    def to_json_dict(self) -> dict:
        return {
            "video": self.video,
            "frame": self.frame,
            "class": self.class_id,
            "box": list(self.box.as_tuple()),
            "score": self.score,
            "feature": [float(v) for v in self.feature],
            "fullbody": None if self.fullbody is None else list(self.fullbody.as_tuple()),
        }


class DetectionStore:
    """Detections indexed by (video, frame), preserving insertion order."""

    def __init__(self, detections: Iterable[Detection] = ()):
        self._by_vf: dict[tuple[str, int], list[Detection]] = {}
        self.feature_dim: int | None = None
        for det in detections:
            self.add(det)

    def add(self, det: Detection) -> None:
        if self.feature_dim is None:
            self.feature_dim = int(det.feature.shape[0])
        elif det.feature.shape[0] != self.feature_dim:
            raise ValueError(
                f"feature dim {det.feature.shape[0]} != store dim {self.feature_dim}"
            )
        self._by_vf.setdefault((det.video, det.frame), []).append(det)

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_vf.values())

    def __iter__(self) -> Iterator[Detection]:
        for key in sorted(self._by_vf):
            yield from self._by_vf[key]

    def videos(self) -> list[str]:
        return sorted({v for v, _ in self._by_vf})

    def frames(self, video: str) -> list[int]:
        return sorted(f for v, f in self._by_vf if v == video)

    def frame_range(self, video: str) -> tuple[int, int]:
        frames = self.frames(video)
        if not frames:
            raise KeyError(f"no detections for video {video!r}")
        return frames[0], frames[-1]

    def at(self, video: str, frame: int) -> list[Detection]:
        return self._by_vf.get((video, frame), [])

    def best_match(
        self, video: str, frame: int, box: Box, class_id: int | None = None
    ) -> tuple[float, Detection | None]:
        """Best stored detection for a candidate box by the score-times-IoU rule.

        Only detections overlapping the candidate with IoU >= 0.5 count; the
        first record wins ties. Returns (0.0, None) when nothing matches.
        """
        best_product = 0.0
        best_det: Detection | None = None
        for det in self.at(video, frame):
            if class_id is not None and det.class_id != class_id:
                continue
            overlap = iou(det.box, box)
            if overlap < MATCH_IOU_THRESHOLD:
                continue
            product = det.score * overlap
            if product > best_product or best_det is None:
                best_product = product
                best_det = det
        if best_det is None:
            return 0.0, None
        return best_product, best_det

    def query_score(
        self, video: str, frame: int, candidate: Box, class_id: int
    ) -> tuple[float, Detection | None]:
        return self.best_match(video, frame, candidate, class_id)

    def query_feature(
        self, video: str, frame: int, box: Box, class_id: int | None = None
    ) -> np.ndarray | None:
        _, det = self.best_match(video, frame, box, class_id)
        return None if det is None else det.feature

    def without_tube_overlaps(self, tube: Tube, min_overlap: float = 0.5) -> "DetectionStore":
        """Copy of the store without detections covered by the tube.

        A detection is removed when the tube's box in its frame covers at
        least `min_overlap` of the detection's area. Used to suppress an
        extracted person before searching for the next one.
        """
        by_frame = {tf.frame: tf.box for tf in tube.frames}
        out = DetectionStore()
        for key in sorted(self._by_vf):
            video, frame = key
            tube_box = by_frame.get(frame) if video == tube.video else None
            for det in self._by_vf[key]:
                if tube_box is not None:
                    ix1 = max(det.box.x1, tube_box.x1)
                    iy1 = max(det.box.y1, tube_box.y1)
                    ix2 = min(det.box.x2, tube_box.x2)
                    iy2 = min(det.box.y2, tube_box.y2)
                    inter = max(0.0, ix2 - ix1) * max(0.0, iy2 - iy1)
                    if inter / det.box.area >= min_overlap:
                        continue
                out.add(det)
        return out


def query_score(
    store: DetectionStore, video: str, frame: int, candidate: Box, class_id: int
) -> tuple[float, Detection | None]:
    """Module-level alias for DetectionStore.query_score."""
    return store.query_score(video, frame, candidate, class_id)


def query_fullbody(model: FullBodyRegressor | None, matched: Detection) -> Box:
    """Full-body box for a matched detection.

    A full-body box stored on the detection takes precedence; otherwise the
    class-conditional regressor maps the part box to a full-body box.
    """
    if matched.fullbody is not None:
        return matched.fullbody
    if model is None:
        raise ConfigurationError(
            "detection has no stored full-body box and no regressor was provided"
        )
    feature = matched.feature
    if model.feature_dim == 0:
        feature = feature[:0]  # intercept-only model ignores the feature
    return apply_regressor(model, matched.class_id, matched.box, feature)


def _parse_detection(doc: dict) -> Detection:
    box = doc["box"]
    fullbody = doc.get("fullbody")
    return Detection(
        video=str(doc["video"]),
        frame=int(doc["frame"]),
        class_id=int(doc["class"]),
        box=Box(float(box[0]), float(box[1]), float(box[2]), float(box[3])),
        score=float(doc["score"]),
        feature=np.asarray(doc["feature"], dtype=float),
        fullbody=None if fullbody is None else Box(*(float(v) for v in fullbody)),
    )


def load_detections(path: str | Path) -> DetectionStore:
    """Parse a detections JSONL file into a store.

    Malformed records raise a ParseError naming the line; scores outside
    [0, 1] and inconsistent feature dimensions are rejected.
    """
    store = DetectionStore()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                det = _parse_detection(json.loads(line))
                store.add(det)
            except (json.JSONDecodeError, KeyError, TypeError, IndexError, ValueError) as e:
                raise ParseError(f"bad detection record: {e}", path=str(path), line=lineno) from e
    return store


def save_detections(detections: Iterable[Detection], path: str | Path) -> None:
    with open(path, "w") as fh:
        for det in detections:
            fh.write(json.dumps(det.to_json_dict()) + "\n")
