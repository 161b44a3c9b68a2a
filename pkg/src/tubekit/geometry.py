"""Axis-aligned box algebra, tube records, interpolation, and temporal IoU.

Boxes are corner-parameterized real rectangles (x1, y1, x2, y2) with
x1 < x2 and y1 < y2. Coordinates may lie outside the frame: boxes are
amodal by default and are only clipped when explicitly cropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "Box",
    "FrameExtent",
    "TubeFrame",
    "Tube",
    "iou",
    "crop_to_frame",
    "interpolate_tube",
    "temporal_iou",
]


@dataclass(frozen=True)
class Box:
    """Rectangle with strictly positive width and height."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"box coordinates must be finite, got {coords}")
        if self.x1 >= self.x2 or self.y1 >= self.y2:
            raise ValueError(f"degenerate box (zero or negative extent): {coords}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    @classmethod
    def from_center(cls, cx: float, cy: float, width: float, height: float) -> "Box":
        return cls(cx - 0.5 * width, cy - 0.5 * height, cx + 0.5 * width, cy + 0.5 * height)

    def contains_box(self, other: "Box", tol: float = 0.0) -> bool:
        """True when `other` lies inside this box, allowing `tol` slack per edge."""
        return (
            other.x1 >= self.x1 - tol
            and other.y1 >= self.y1 - tol
            and other.x2 <= self.x2 + tol
            and other.y2 <= self.y2 + tol
        )

    def contains_point(self, x: float, y: float, strict: bool = False) -> bool:
        if strict:
            return self.x1 < x < self.x2 and self.y1 < y < self.y2
        return self.x1 <= x <= self.x2 and self.y1 <= y <= self.y2


@dataclass(frozen=True)
class FrameExtent:
    """Pixel size of a video frame; the frame spans [0, width] x [0, height]."""

    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"frame extent must be positive, got {self.width}x{self.height}")


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes. Zero when they do not overlap."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = ix2 - ix1
    ih = iy2 - iy1
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def crop_to_frame(box: Box, extent: FrameExtent) -> Box | None:
    """Clip `box` to the frame rectangle.

    Returns None when the box lies entirely outside the frame (an empty
    crop, not an error).
    """
    x1 = max(box.x1, 0.0)
    y1 = max(box.y1, 0.0)
    x2 = min(box.x2, float(extent.width))
    y2 = min(box.y2, float(extent.height))
    if x1 >= x2 or y1 >= y2:
        return None
    return Box(x1, y1, x2, y2)


@dataclass(frozen=True)
class TubeFrame:
    """One frame of a tube: box, per-frame score, contributing part classes."""

    frame: int
    box: Box
    score: float = 0.0
    parts: tuple[int, ...] = ()


@dataclass
class Tube:
    """A per-frame sequence of full-body boxes for one person in one video."""

    video: str
    frames: tuple[TubeFrame, ...]

    def __post_init__(self):
        self.frames = tuple(self.frames)
        if not self.frames:
            raise ValueError("tube must contain at least one frame")
        indices = [f.frame for f in self.frames]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError(f"tube frame indices must be strictly increasing: {indices}")

    @property
    def first_frame(self) -> int:
        return self.frames[0].frame

    @property
    def last_frame(self) -> int:
        return self.frames[-1].frame

    def box_at(self, frame: int) -> Box | None:
        for tf in self.frames:
            if tf.frame == frame:
                return tf.box
        return None

    def to_json_dict(self) -> dict:
        return {
            "video": self.video,
            "frames": [
                {
                    "frame": tf.frame,
                    "box": list(tf.box.as_tuple()),
                    "score": tf.score,
                    "parts": list(tf.parts),
                }
                for tf in self.frames
            ],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Tube":
        frames = [
            TubeFrame(
                frame=int(f["frame"]),
                box=Box(*f["box"]),
                score=float(f.get("score", 0.0)),
                parts=tuple(int(p) for p in f.get("parts", ())),
            )
            for f in doc["frames"]
        ]
        return cls(video=str(doc["video"]), frames=frames)


def interpolate_tube(tube: Tube, stride: int) -> Tube:
    """Fill a keyframe tube to every intermediate frame by linear interpolation.

    Keyframes are kept verbatim. Box corners are interpolated linearly
    between consecutive keyframes; scores and part lists are carried from
    the earlier keyframe. Consecutive keyframes must be at most `stride`
    apart (the final gap on either side of a video may be shorter).
    Endpoints are not extrapolated. A single-keyframe tube is returned
    unchanged.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    kfs = tube.frames
    if len(kfs) == 1:
        return Tube(tube.video, list(kfs))
    out: list[TubeFrame] = []
    for a, b in zip(kfs, kfs[1:]):
        gap = b.frame - a.frame
        if gap > stride:
            raise ValueError(
                f"keyframes {a.frame} and {b.frame} are {gap} apart, exceeds stride {stride}"
            )
        out.append(a)
        ax1, ay1, ax2, ay2 = a.box.as_tuple()
        bx1, by1, bx2, by2 = b.box.as_tuple()
        for f in range(a.frame + 1, b.frame):
            t = (f - a.frame) / gap
            box = Box(
                ax1 + (bx1 - ax1) * t,
                ay1 + (by1 - ay1) * t,
                ax2 + (bx2 - ax2) * t,
                ay2 + (by2 - ay2) * t,
            )
            out.append(TubeFrame(frame=f, box=box, score=a.score, parts=a.parts))
    out.append(kfs[-1])
    return Tube(tube.video, out)


def temporal_iou(tube: Tube, gt, extent: FrameExtent | None = None) -> float:
    """Mean per-frame spatial IoU over the ground truth's annotated frames.

    `gt` must expose `.frames` as a sequence of (frame_index, Box) pairs.
    Frames missing from the tube contribute zero. When `extent` is given,
    tube boxes (which may extend beyond the image) are cropped to the frame
    first so they compare fairly against in-frame annotations; a tube box
    cropped away entirely contributes zero.
    """
    pairs: Sequence[tuple[int, Box]] = gt.frames
    if not pairs:
        raise ValueError("ground-truth instance has no annotated frames")
    by_frame = {tf.frame: tf.box for tf in tube.frames}
    total = 0.0
    for frame, gt_box in pairs:
        tube_box = by_frame.get(frame)
        if tube_box is None:
            continue
        if extent is not None:
            tube_box = crop_to_frame(tube_box, extent)
            if tube_box is None:
                continue
        total += iou(tube_box, gt_box)
    return total / len(pairs)
