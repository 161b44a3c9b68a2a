"""Full-body tube extraction by multi-part tracking over stored detections.

One tube is grown from the single best-scoring detection (the anchor).
Each tracked part slides a window grid around its previous box, scores
candidates with detector evidence plus an online instance classifier, and
is pruned when the combined score falls below a threshold. Surviving parts
are regressed to full-body boxes and merged with their combined scores as
weights; new parts spawn inside the merged box. Tracking runs over
keyframes in both directions from the anchor and is then interpolated to
every frame.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import Box, Tube, TubeFrame, interpolate_tube
from .provider import Detection, DetectionStore, query_fullbody
from .regress import FullBodyRegressor, merge_regressed

__all__ = [
    "TrackerConfig",
    "InstanceClassifier",
    "PartTrack",
    "TrackerState",
    "initialize",
    "step",
    "build_tube",
    "extract_tubes",
    "load_tubes",
    "save_tubes",
]


@dataclass(frozen=True)
class TrackerConfig:
    """Knobs for tube extraction; defaults match the intended operating point."""

    max_parts: int = 5
    spawn_threshold: float = 0.25
    prune_threshold: float = 1.0
    keyframe_stride: int = 5
    scales: tuple[float, ...] = (0.9, 1.0, 1.1)
    radius_factor: float = 0.5  # search radius as a fraction of the box diagonal
    stride_factor: float = 0.125  # grid step as a fraction of box width/height
    classifier_eta: float = 0.01
    classifier_reg: float = 1e-4
    classifier_init_epochs: int = 100
    negative_iou: float = 0.3  # same-frame detections below this IoU are negatives
    spawn_containment_tol: float = 2.0  # pixels of slack for "inside the merged box"

    def __post_init__(self):
        if self.max_parts < 1:
            raise ValueError("max_parts must be >= 1")
        if self.keyframe_stride < 1:
            raise ValueError("keyframe_stride must be >= 1")
        if not self.scales:
            raise ValueError("at least one candidate scale is required")


@dataclass
class InstanceClassifier:
    """Linear scorer trained online with hinge-loss subgradient steps."""

    weights: np.ndarray
    bias: float = 0.0
    eta: float = 0.01
    reg: float = 1e-4

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)

    def response(self, feature: np.ndarray) -> float:
        return float(self.weights @ np.asarray(feature, dtype=float) + self.bias)

    def step(self, feature: np.ndarray, label: int) -> None:
        """One hinge-loss gradient step on (feature, label), label in {-1, +1}."""
        x = np.asarray(feature, dtype=float)
        margin = label * self.response(x)
        self.weights *= 1.0 - self.eta * self.reg
        if margin < 1.0:
            self.weights += self.eta * label * x
            self.bias += self.eta * label

    @classmethod
    def fit(
        cls,
        positive: np.ndarray,
        negatives: Sequence[np.ndarray],
        eta: float,
        reg: float,
        epochs: int,
    ) -> "InstanceClassifier":
        """Train from scratch on one positive and a fixed list of negatives.

        Examples are visited in a fixed order (positive first, then the
        negatives as given) for a fixed number of epochs, so the result is
        deterministic.
        """
        clf = cls(weights=np.zeros_like(np.asarray(positive, dtype=float)), eta=eta, reg=reg)
        for _ in range(epochs):
            clf.step(positive, +1)
            for neg in negatives:
                clf.step(neg, -1)
        return clf


@dataclass
class PartTrack:
    """One tracked part: its class, current box, and its own classifier."""

    class_id: int
    box: Box
    classifier: InstanceClassifier
    birth_frame: int
    last_combined: float = 0.0
    last_fullbody: Box | None = None


@dataclass
class TrackerState:
    """Mutable tracking state for one tube in one video."""

    video: str
    anchor_frame: int
    anchor: Detection
    tracks: list[PartTrack]
    keyframes: dict[int, TubeFrame]
    config: TrackerConfig
    alive: bool = True


def _detection_sort_key(det: Detection) -> tuple:
    # anchor preference: highest score, then earliest frame, lowest class id,
    # lexicographically smallest box
    return (-det.score, det.frame, det.class_id, det.box.as_tuple())


def _half_shifted_boxes(box: Box) -> list[Box]:
    w, h = box.width, box.height
    cx, cy = box.center
    return [
        Box.from_center(cx - 0.5 * w, cy, w, h),
        Box.from_center(cx + 0.5 * w, cy, w, h),
        Box.from_center(cx, cy - 0.5 * h, w, h),
        Box.from_center(cx, cy + 0.5 * h, w, h),
    ]


def _train_track_classifier(
    store: DetectionStore, det: Detection, config: TrackerConfig
) -> InstanceClassifier:
    """Initial classifier for a track anchored at `det`.

    Negatives are the same-frame detections far from the chosen box plus
    whatever the store matches at four half-box-shifted copies of it.
    """
    from .geometry import iou

    negatives: list[np.ndarray] = []
    for other in store.at(det.video, det.frame):
        if other is det:
            continue
        if iou(other.box, det.box) < config.negative_iou:
            negatives.append(other.feature)
    for shifted in _half_shifted_boxes(det.box):
        _, matched = store.best_match(det.video, det.frame, shifted)
        if matched is not None and matched is not det:
            negatives.append(matched.feature)
    return InstanceClassifier.fit(
        det.feature,
        negatives,
        eta=config.classifier_eta,
        reg=config.classifier_reg,
        epochs=config.classifier_init_epochs,
    )


def initialize(
    store: DetectionStore,
    video: str,
    model: FullBodyRegressor | None = None,
    config: TrackerConfig | None = None,
) -> TrackerState:
    """Pick the anchor detection of a video and start a single-track state.

    The anchor is the globally best-scoring detection; ties fall to the
    earliest frame, then the lowest class id, then the lexicographically
    smallest box. The anchor's full-body box seeds the tube at its frame.
    """
    config = config or TrackerConfig()
    candidates = [det for frame in store.frames(video) for det in store.at(video, frame)]
    if not candidates:
        raise ValueError(f"video {video!r} has no detections")
    anchor = min(candidates, key=_detection_sort_key)
    classifier = _train_track_classifier(store, anchor, config)
    detector_score, _ = store.query_score(video, anchor.frame, anchor.box, anchor.class_id)
    combined = detector_score + classifier.response(anchor.feature)
    fullbody = query_fullbody(model, anchor)
    track = PartTrack(
        class_id=anchor.class_id,
        box=anchor.box,
        classifier=classifier,
        birth_frame=anchor.frame,
        last_combined=combined,
        last_fullbody=fullbody,
    )
    tracks = [track]
    _spawn_tracks(tracks, store, video, anchor.frame, fullbody, config)
    keyframes = {
        anchor.frame: TubeFrame(
            frame=anchor.frame,
            box=fullbody,
            score=sum(t.last_combined for t in tracks),
            parts=tuple(sorted(t.class_id for t in tracks)),
        )
    }
    return TrackerState(
        video=video,
        anchor_frame=anchor.frame,
        anchor=anchor,
        tracks=tracks,
        keyframes=keyframes,
        config=config,
        alive=True,
    )


def _candidate_boxes(box: Box, config: TrackerConfig) -> np.ndarray:
    """Sliding-window grid around a box, as an (n, 4) corner array.

    Offsets cover a disc-bounding square of radius `radius_factor` times the
    box diagonal, stepped by `stride_factor` times the box size per axis,
    at each configured scale. Order is deterministic: scales as listed,
    then dy, then dx, ascending.
    """
    w, h = box.width, box.height
    cx, cy = box.center
    radius = config.radius_factor * math.hypot(w, h)
    sx = config.stride_factor * w
    sy = config.stride_factor * h
    nx = int(radius / sx + 1e-9)
    ny = int(radius / sy + 1e-9)
    dxs = np.arange(-nx, nx + 1) * sx
    dys = np.arange(-ny, ny + 1) * sy
    rows = []
    for scale in config.scales:
        sw, sh = 0.5 * w * scale, 0.5 * h * scale
        for dy in dys:
            for dx in dxs:
                rows.append((cx + dx - sw, cy + dy - sh, cx + dx + sw, cy + dy + sh))
    return np.asarray(rows, dtype=float)


def _iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between (n, 4) and (m, 4) corner arrays."""
    ix1 = np.maximum(a[:, None, 0], b[None, :, 0])
    iy1 = np.maximum(a[:, None, 1], b[None, :, 1])
    ix2 = np.minimum(a[:, None, 2], b[None, :, 2])
    iy2 = np.minimum(a[:, None, 3], b[None, :, 3])
    iw = np.clip(ix2 - ix1, 0.0, None)
    ih = np.clip(iy2 - iy1, 0.0, None)
    inter = iw * ih
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return np.where(inter > 0.0, inter / union, 0.0)


def _score_track(
    track: PartTrack, store: DetectionStore, video: str, frame: int, config: TrackerConfig
) -> tuple[Box, float, Detection | None]:
    """Best candidate for a track in a frame: (box, combined score, matched)."""
    from .provider import MATCH_IOU_THRESHOLD

    cands = _candidate_boxes(track.box, config)
    dets = store.at(video, frame)
    if not dets:
        first = cands[0]
        return Box(*first), 0.0, None
    det_boxes = np.asarray([d.box.as_tuple() for d in dets], dtype=float)
    det_scores = np.asarray([d.score for d in dets], dtype=float)
    same_class = np.asarray([d.class_id == track.class_id for d in dets], dtype=bool)
    responses = np.asarray([track.classifier.response(d.feature) for d in dets], dtype=float)
    overlaps = _iou_matrix(cands, det_boxes)
    eligible = (overlaps >= MATCH_IOU_THRESHOLD) & same_class[None, :]
    products = np.where(eligible, overlaps * det_scores[None, :], -1.0)
    best_det = np.argmax(products, axis=1)
    row = np.arange(len(cands))
    best_product = products[row, best_det]
    matched_mask = best_product >= 0.0
    detector_part = np.where(matched_mask, best_product, 0.0)
    response_part = np.where(matched_mask, responses[best_det], 0.0)
    combined = detector_part + response_part
    winner = int(np.argmax(combined))
    matched = dets[int(best_det[winner])] if matched_mask[winner] else None
    return Box(*cands[winner]), float(combined[winner]), matched


def _spawn_tracks(
    tracks: list[PartTrack],
    store: DetectionStore,
    video: str,
    frame: int,
    merged: Box,
    config: TrackerConfig,
) -> None:
    """Start tracks for untracked part classes detected inside the merged box.

    Candidates need a detection score at or above the spawn threshold and a
    box inside the merged full-body box (within the containment slack).
    They are taken best score first, one track per class, until the part
    budget is reached.
    """
    if len(tracks) >= config.max_parts:
        return
    tracked = {t.class_id for t in tracks}
    spawnable = [
        det
        for det in store.at(video, frame)
        if det.class_id not in tracked
        and det.score >= config.spawn_threshold
        and merged.contains_box(det.box, tol=config.spawn_containment_tol)
    ]
    spawnable.sort(key=lambda d: (-d.score, d.class_id, d.box.as_tuple()))
    for det in spawnable:
        if len(tracks) >= config.max_parts:
            break
        if det.class_id in tracked:
            continue
        classifier = _train_track_classifier(store, det, config)
        tracks.append(
            PartTrack(
                class_id=det.class_id,
                box=det.box,
                classifier=classifier,
                birth_frame=frame,
                last_combined=det.score + classifier.response(det.feature),
                last_fullbody=None,
            )
        )
        tracked.add(det.class_id)


def step(
    state: TrackerState,
    store: DetectionStore,
    model: FullBodyRegressor | None,
    frame: int,
) -> TrackerState:
    """Advance every track to `frame`, prune, merge, and spawn.

    Candidates are scored as detector evidence (score times IoU of the best
    same-class match) plus the track classifier's response on the matched
    feature. Tracks below the prune threshold are removed after scoring and
    before merging; if none survive, the tube terminates at the previous
    keyframe (state.alive goes False; not an error). The merged full-body
    box is the combined-score-weighted average over survivors, and stored
    detections fully inside it may spawn new tracks, best score first, up
    to max_parts, one per part class.
    """
    if not state.alive:
        raise ValueError("cannot step a terminated tracker state")
    cfg = state.config
    survivors: list[PartTrack] = []
    for track in state.tracks:
        winner_box, combined, matched = _score_track(track, store, state.video, frame, cfg)
        track.box = winner_box
        track.last_combined = combined
        if matched is not None:
            track.last_fullbody = query_fullbody(model, matched)
            track.classifier.step(matched.feature, +1)
        else:
            track.last_fullbody = None
        if combined >= cfg.prune_threshold and track.last_fullbody is not None:
            survivors.append(track)
    state.tracks = survivors
    if not survivors:
        state.alive = False
        return state
    merged = merge_regressed([(t.last_fullbody, t.last_combined) for t in survivors])
    total = sum(t.last_combined for t in survivors)
    parts = tuple(sorted(t.class_id for t in survivors))
    state.keyframes[frame] = TubeFrame(frame=frame, box=merged, score=total, parts=parts)
    _spawn_tracks(state.tracks, store, state.video, frame, merged, cfg)
    return state


def _run_direction(
    state: TrackerState,
    store: DetectionStore,
    model: FullBodyRegressor | None,
    bound: int,
    stride: int,
    forward: bool,
) -> None:
    frame = state.anchor_frame
    while state.alive:
        nxt = frame + stride if forward else frame - stride
        if forward and nxt > bound:
            if frame >= bound:
                break
            nxt = bound  # shorter final hop so the tube reaches the last frame
        elif not forward and nxt < bound:
            if frame <= bound:
                break
            nxt = bound
        step(state, store, model, nxt)
        frame = nxt


def build_tube(
    store: DetectionStore,
    video: str,
    model: FullBodyRegressor | None = None,
    config: TrackerConfig | None = None,
) -> Tube:
    """Extract one dense tube from a video's detections.

    Tracking starts at the anchor and visits keyframes every
    `keyframe_stride` frames forward to the last detected frame, then again
    backward from a fresh copy of the anchor track to the first detected
    frame. Keyframe boxes are then interpolated to every frame in between.
    """
    config = config or TrackerConfig()
    first, last = store.frame_range(video)
    forward_state = initialize(store, video, model, config)
    _run_direction(forward_state, store, model, last, config.keyframe_stride, forward=True)
    backward_state = initialize(store, video, model, config)
    _run_direction(backward_state, store, model, first, config.keyframe_stride, forward=False)
    keyframes = dict(forward_state.keyframes)
    for f, tf in backward_state.keyframes.items():
        if f < forward_state.anchor_frame:
            keyframes[f] = tf
    ordered = [keyframes[f] for f in sorted(keyframes)]
    tube = Tube(video=video, frames=ordered)
    return interpolate_tube(tube, config.keyframe_stride)


def extract_tubes(
    store: DetectionStore,
    video: str,
    model: FullBodyRegressor | None = None,
    config: TrackerConfig | None = None,
    max_tubes: int = 1,
    suppression_overlap: float = 0.5,
) -> list[Tube]:
    """Extract up to `max_tubes` tubes, suppressing each person found.

    After each tube, detections whose area is covered at least
    `suppression_overlap` by the tube's box in their frame are removed and
    extraction reruns on the remainder.
    """
    tubes: list[Tube] = []
    current = store
    for _ in range(max_tubes):
        if video not in current.videos():
            break
        tube = build_tube(current, video, model, config)
        tubes.append(tube)
        current = current.without_tube_overlaps(tube, suppression_overlap)
    return tubes


def load_tubes(path: str | Path) -> list[Tube]:
    tubes = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                tubes.append(Tube.from_json_dict(json.loads(line)))
    return tubes


def save_tubes(tubes: Iterable[Tube], path: str | Path) -> None:
    with open(path, "w") as fh:
        for tube in tubes:
            fh.write(json.dumps(tube.to_json_dict()) + "\n")
