"""Amodal pose completion: estimate a full body from partially visible joints.

A query pose with missing joints is completed by scanning a library of
complete poses: each library pose is aligned onto the query's visible
joints with a least-squares similarity transform (uniform scale plus
translation, no rotation), and the pose with the smallest RMS residual
supplies the missing joints. Boxes derived from completed poses stand in
for occluded or truncated full-body extents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientEvidenceError, ParseError
from .geometry import Box
from .partmodel import Pose2D, Skeleton

__all__ = [
    "PoseLibrary",
    "CompletionResult",
    "complete_pose",
    "pose_to_box",
    "simulate_removal",
    "removal_curve",
    "load_poses",
    "save_poses",
    "load_pose_library",
    "save_pose_library",
]

DEFAULT_BOX_MARGIN = 20.0

REMOVAL_DIRECTIONS = ("lowest", "highest", "leftmost", "rightmost")


@dataclass
class PoseLibrary:
    """Complete poses sharing one skeleton, stacked for vectorized search."""

    skeleton: Skeleton
    xy: np.ndarray  # (n_poses, n_joints, 2)

    def __post_init__(self):
        self.xy = np.asarray(self.xy, dtype=float)
        if self.xy.ndim != 3 or self.xy.shape[2] != 2:
            raise ValueError(f"library must have shape (N, J, 2), got {self.xy.shape}")
        if self.xy.shape[0] < 1:
            raise ValueError("pose library must contain at least one pose")
        if self.xy.shape[1] != self.skeleton.n_joints:
            raise ValueError(
                f"library poses have {self.xy.shape[1]} joints, skeleton has {self.skeleton.n_joints}"
            )
        if not np.all(np.isfinite(self.xy)):
            raise ValueError("library poses must be finite")

    def __len__(self) -> int:
        return int(self.xy.shape[0])

    @classmethod
    def from_poses(cls, skeleton: Skeleton, poses: Iterable[Pose2D]) -> "PoseLibrary":
        stack = []
        for p in poses:
            if not p.visible.all():
                raise ValueError("library poses must be complete (all joints visible)")
            stack.append(p.xy)
        return cls(skeleton=skeleton, xy=np.stack(stack))


@dataclass
class CompletionResult:
    """Completed pose plus the matched library entry and its alignment."""

    pose: Pose2D
    library_index: int
    scale: float
    translation: tuple[float, float]
    distance: float


def complete_pose(query: Pose2D, library: PoseLibrary) -> CompletionResult:
    """Fill in the invisible joints of `query` from the best-aligned library pose.

    Every library pose is aligned to the query's visible joints by the
    closed-form least-squares similarity transform; the match minimizes the
    RMS residual over those joints (ties go to the lowest library index).
    Visible query joints are kept verbatim in the result.
    """
    if query.n_joints != library.xy.shape[1]:
        raise ValueError(
            f"query has {query.n_joints} joints, library has {library.xy.shape[1]}"
        )
    vis = query.visible_indices()
    if len(vis) < 2:
        raise InsufficientEvidenceError(
            f"pose completion needs at least 2 visible joints, got {len(vis)}"
        )
    q = query.xy[vis]  # (V, 2)
    p = library.xy[:, vis, :]  # (N, V, 2)
    q_mean = q.mean(axis=0)
    p_mean = p.mean(axis=1)
    qc = q - q_mean
    pc = p - p_mean[:, None, :]
    var = np.einsum("nvc,nvc->n", pc, pc)
    cov = np.einsum("nvc,vc->n", pc, qc)
    scale = np.where(var > 0.0, cov / np.where(var > 0.0, var, 1.0), 1.0)
    trans = q_mean[None, :] - scale[:, None] * p_mean  # (N, 2)
    aligned = scale[:, None, None] * p + trans[:, None, :]
    rms = np.sqrt(((aligned - q[None]) ** 2).sum(axis=(1, 2)) / len(vis))
    best = int(np.argmin(rms))
    completed = scale[best] * library.xy[best] + trans[best]
    completed[vis] = q  # keep observed joints exactly
    return CompletionResult(
        pose=Pose2D(xy=completed, visible=np.ones(query.n_joints, dtype=bool)),
        library_index=best,
        scale=float(scale[best]),
        translation=(float(trans[best, 0]), float(trans[best, 1])),
        distance=float(rms[best]),
    )


def pose_to_box(pose: Pose2D, margin: float = DEFAULT_BOX_MARGIN) -> Box:
    """Tight box around the pose's visible joints, expanded by `margin` per side."""
    pts = pose.xy[pose.visible]
    x1, y1 = pts.min(axis=0)
    x2, y2 = pts.max(axis=0)
    return Box(x1 - margin, y1 - margin, x2 + margin, y2 + margin)


def _removal_order(pose: Pose2D, direction: str) -> list[int]:
    if direction not in REMOVAL_DIRECTIONS:
        raise ValueError(f"direction must be one of {REMOVAL_DIRECTIONS}, got {direction!r}")
    idx = pose.visible_indices()
    xs = pose.xy[idx, 0]
    ys = pose.xy[idx, 1]
    if direction == "lowest":  # image y grows downward
        keys = -ys
    elif direction == "highest":
        keys = ys
    elif direction == "leftmost":
        keys = xs
    else:
        keys = -xs
    order = sorted(range(len(idx)), key=lambda i: (keys[i], int(idx[i])))
    return [int(idx[i]) for i in order]


def simulate_removal(pose: Pose2D, direction: str, n: int) -> Pose2D:
    """Mark invisible the `n` visible joints most extreme along `direction`.

    Ties break toward the lower joint index, so removal sets are nested as
    `n` grows. At least two joints must remain visible.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n >= pose.n_visible - 1:
        raise ValueError(
            f"cannot remove {n} of {pose.n_visible} visible joints; at least 2 must remain"
        )
    out = pose.copy()
    for joint in _removal_order(pose, direction)[:n]:
        out.visible[joint] = False
    return out


def removal_curve(
    library: PoseLibrary,
    eval_poses: Sequence[Pose2D],
    direction: str,
    margin: float = DEFAULT_BOX_MARGIN,
    max_removed: int | None = None,
) -> list[tuple[int, float]]:
    """Box-recovery accuracy as joints are progressively removed.

    For each removal count n, every evaluation pose is degraded along
    `direction`, completed against the library, and converted to a box;
    the row (visible_count, mean IoU against the original pose's box) is
    reported. Evaluation poses must be complete.
    """
    if not eval_poses:
        raise ValueError("need at least one evaluation pose")
    n_joints = library.xy.shape[1]
    for p in eval_poses:
        if p.n_joints != n_joints:
            raise ValueError("evaluation poses must match the library skeleton")
        if not p.visible.all():
            raise ValueError("evaluation poses must be complete")
    limit = n_joints - 2
    if max_removed is not None:
        limit = min(limit, max_removed)
    from .geometry import iou

    rows = []
    originals = [pose_to_box(p, margin) for p in eval_poses]
    for n in range(0, limit + 1):
        total = 0.0
        for pose, gt_box in zip(eval_poses, originals):
            degraded = simulate_removal(pose, direction, n)
            completed = complete_pose(degraded, library).pose
            total += iou(pose_to_box(completed, margin), gt_box)
        rows.append((n_joints - n, total / len(eval_poses)))
    return rows


def _pose_to_json_dict(pose: Pose2D) -> dict:
    joints = []
    for i in range(pose.n_joints):
        if pose.visible[i]:
            joints.append([float(pose.xy[i, 0]), float(pose.xy[i, 1])])
        else:
            joints.append(None)
    return {"joints": joints}


def _pose_from_json_dict(doc: dict) -> Pose2D:
    raw = doc["joints"]
    xy = np.zeros((len(raw), 2), dtype=float)
    visible = np.zeros(len(raw), dtype=bool)
    for i, j in enumerate(raw):
        if j is not None:
            xy[i] = (float(j[0]), float(j[1]))
            visible[i] = True
    return Pose2D(xy=xy, visible=visible)


def load_poses(path: str | Path) -> list[Pose2D]:
    """Read poses from JSON lines; a null joint entry means not visible."""
    poses = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                poses.append(_pose_from_json_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, IndexError, ValueError) as e:
                raise ParseError(f"bad pose record: {e}", path=str(path), line=lineno) from e
    return poses


def save_poses(poses: Iterable[Pose2D], path: str | Path) -> None:
    with open(path, "w") as fh:
        for p in poses:
            fh.write(json.dumps(_pose_to_json_dict(p)) + "\n")


def load_pose_library(path: str | Path, skeleton: Skeleton) -> PoseLibrary:
    poses = load_poses(path)
    if not poses:
        raise ParseError("pose library file is empty", path=str(path))
    return PoseLibrary.from_poses(skeleton, poses)


def save_pose_library(library: PoseLibrary, path: str | Path) -> None:
    save_poses(
        (Pose2D.complete(library.xy[i]) for i in range(len(library))),
        path,
    )
