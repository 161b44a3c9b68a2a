"""Part vocabulary: skeletons, poses, part descriptors, clustering, class assignment.

A part proposal is summarized by a 4-D descriptor (u, v, w, h): the offset
of its center from the full-body box center (normalized by full-body width
and height, shifted by +0.5) and its size relative to the full-body box.
Contained proposals always land in [0, 1]^4. K-means over the descriptors
of positive proposals defines the part classes; one extra class stands for
the full body.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError
from .geometry import Box
from .regress import FullBodyRegressor

__all__ = [
    "Skeleton",
    "Pose2D",
    "PartDescriptor",
    "PartClassModel",
    "ProposalLabel",
    "descriptor",
    "raw_descriptor",
    "cluster_parts",
    "select_positive_proposals",
    "assign_class",
    "load_skeleton",
    "save_skeleton",
    "load_part_class_model",
    "save_part_class_model",
]

FULLBODY_IOU_THRESHOLD = 0.55
PART_IOU_THRESHOLD = 0.1
CONNECTED_JOINTS_REQUIRED = 3

_EPS = 1e-9


@dataclass(frozen=True)
class Skeleton:
    """Named joints plus an undirected edge list forming a connected graph."""

    joint_names: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        n = len(self.joint_names)
        if n < 1:
            raise ValueError("skeleton needs at least one joint")
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) references a joint outside 0..{n - 1}")
            if i == j:
                raise ValueError(f"self-loop on joint {i}")
        if not self._connected():
            raise ValueError("skeleton edge graph must be connected over all joints")

    @property
    def n_joints(self) -> int:
        return len(self.joint_names)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in self.joint_names]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def _connected(self) -> bool:
        if self.n_joints == 1:
            return True
        adj = self.adjacency()
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n_joints

    def to_json_dict(self) -> dict:
        return {"joints": list(self.joint_names), "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Skeleton":
        return cls(
            joint_names=tuple(str(j) for j in doc["joints"]),
            edges=tuple((int(i), int(j)) for i, j in doc["edges"]),
        )


def load_skeleton(path: str | Path) -> Skeleton:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid skeleton JSON: {e}", path=str(path)) from e
    return Skeleton.from_json_dict(doc)


def save_skeleton(skeleton: Skeleton, path: str | Path) -> None:
    Path(path).write_text(json.dumps(skeleton.to_json_dict(), indent=2) + "\n")


@dataclass
class Pose2D:
    """2D joint coordinates with per-joint visibility flags."""

    xy: np.ndarray
    visible: np.ndarray

    def __post_init__(self):
        self.xy = np.asarray(self.xy, dtype=float)
        self.visible = np.asarray(self.visible, dtype=bool)
        if self.xy.ndim != 2 or self.xy.shape[1] != 2:
            raise ValueError(f"pose coordinates must have shape (J, 2), got {self.xy.shape}")
        if self.visible.shape != (self.xy.shape[0],):
            raise ValueError("visibility mask must have one flag per joint")
        if not np.all(np.isfinite(self.xy)):
            raise ValueError("pose coordinates must be finite")
        if not self.visible.any():
            raise ValueError("pose must have at least one visible joint")

    @property
    def n_joints(self) -> int:
        return int(self.xy.shape[0])

    @property
    def n_visible(self) -> int:
        return int(self.visible.sum())

    def visible_indices(self) -> np.ndarray:
        return np.flatnonzero(self.visible)

    @classmethod
    def complete(cls, xy) -> "Pose2D":
        xy = np.asarray(xy, dtype=float)
        return cls(xy=xy, visible=np.ones(xy.shape[0], dtype=bool))

    def copy(self) -> "Pose2D":
        return Pose2D(xy=self.xy.copy(), visible=self.visible.copy())


@dataclass(frozen=True)
class PartDescriptor:
    """Normalized location and size of a part inside its full-body box."""

    u: float
    v: float
    w: float
    h: float

    def __post_init__(self):
        for name, val in zip("uvwh", (self.u, self.v, self.w, self.h)):
            if not (-_EPS <= val <= 1.0 + _EPS):
                raise ValueError(f"descriptor component {name}={val} outside [0, 1]")

    def as_array(self) -> np.ndarray:
        return np.clip(np.array([self.u, self.v, self.w, self.h], dtype=float), 0.0, 1.0)


def raw_descriptor(part: Box, gt: Box) -> np.ndarray:
    """Descriptor 4-vector without the containment requirement.

    Values may leave [0, 1] when the part sticks out of the full-body box;
    class assignment by centroid distance still applies to such parts.
    """
    pcx, pcy = part.center
    gcx, gcy = gt.center
    u = (pcx - gcx) / gt.width + 0.5
    v = (pcy - gcy) / gt.height + 0.5
    w = part.width / gt.width
    h = part.height / gt.height
    return np.array([u, v, w, h], dtype=float)


def descriptor(part: Box, gt: Box) -> PartDescriptor:
    """Descriptor of a part contained in its full-body box."""
    if not gt.contains_box(part, tol=1e-7):
        raise ValueError(f"part {part.as_tuple()} is not contained in {gt.as_tuple()}")
    u, v, w, h = raw_descriptor(part, gt)
    return PartDescriptor(
        u=min(max(u, 0.0), 1.0),
        v=min(max(v, 0.0), 1.0),
        w=min(max(w, 0.0), 1.0),
        h=min(max(h, 0.0), 1.0),
    )


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]), dtype=float)
    first = int(rng.integers(n))
    centroids[0] = x[first]
    d2 = np.sum((x - centroids[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a chosen centroid
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[c] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centroids[c]) ** 2, axis=1))
    return centroids


def _assign(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # squared euclidean distances, ties resolved to the lowest index by argmin
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def _sse(x: np.ndarray, centroids: np.ndarray, assign: np.ndarray) -> float:
    return float(((x - centroids[assign]) ** 2).sum())


def _lloyd(
    x: np.ndarray, centroids: np.ndarray, max_iter: int
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Lloyd iterations until the assignment is a fixed point. Returns the
    final centroids, assignment, and the SSE after each update."""
    k = centroids.shape[0]
    assign = _assign(x, centroids)
    history = [_sse(x, centroids, assign)]
    for _ in range(max_iter):
        new_centroids = centroids.copy()
        for c in range(k):
            members = x[assign == c]
            if len(members):
                new_centroids[c] = members.mean(axis=0)
        # repair empty clusters with the points farthest from their centroid
        counts = np.bincount(assign, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if len(empties):
            d2 = ((x - new_centroids[assign]) ** 2).sum(axis=1)
            taken: set[int] = set()
            for c in empties:
                order = np.argsort(-d2, kind="stable")
                pick = next(int(i) for i in order if int(i) not in taken)
                taken.add(pick)
                new_centroids[c] = x[pick]
        new_assign = _assign(x, new_centroids)
        centroids = new_centroids
        history.append(_sse(x, centroids, new_assign))
        if np.array_equal(new_assign, assign):
            assign = new_assign
            break
        assign = new_assign
    return centroids, assign, history


def cluster_parts(
    descriptors: Iterable, k: int, seed: int = 0, max_iter: int = 300, restarts: int = 10
) -> np.ndarray:
    """K-means over part descriptors: k-means++ seeding then Lloyd iterations.

    Each restart seeds k-means++ from a stream derived from `seed` and runs
    Lloyd until the assignment stops changing or `max_iter` updates have
    been applied; the centroids with the lowest SSE win (ties to the
    earliest restart). Deterministic for a fixed seed. Returns the (k, 4)
    centroids.
    """
    rows = []
    for d in descriptors:
        rows.append(d.as_array() if isinstance(d, PartDescriptor) else np.asarray(d, dtype=float))
    x = np.asarray(rows, dtype=float)
    if x.ndim != 2 or x.shape[1] != 4:
        raise ValueError(f"descriptors must be 4-D vectors, got shape {x.shape}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    if x.shape[0] < k:
        raise ValueError(f"need at least k={k} descriptors, got {x.shape[0]}")
    if np.min(x) < -_EPS or np.max(x) > 1.0 + _EPS:
        raise ValueError("descriptor components must lie in [0, 1]")
    master = np.random.default_rng(seed)
    best_centroids: np.ndarray | None = None
    best_sse = np.inf
    for _ in range(restarts):
        rng = np.random.default_rng(int(master.integers(2**63)))
        centroids = _kmeans_pp_init(x, k, rng)
        centroids, assign, _ = _lloyd(x, centroids, max_iter)
        sse = _sse(x, centroids, assign)
        if sse < best_sse:
            best_sse = sse
            best_centroids = centroids
    return best_centroids


@dataclass
class PartClassModel:
    """K part-class centroids plus the implicit full-body class (id = k)."""

    k: int
    centroids: np.ndarray
    regressor: FullBodyRegressor | None = None

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=float)
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.centroids.shape != (self.k, 4):
            raise ValueError(
                f"centroids must have shape ({self.k}, 4), got {self.centroids.shape}"
            )
        if np.min(self.centroids) < -_EPS or np.max(self.centroids) > 1.0 + _EPS:
            raise ValueError("centroid components must lie in [0, 1]")
        for a in range(self.k):
            for b in range(a + 1, self.k):
                if np.allclose(self.centroids[a], self.centroids[b], atol=0.0):
                    raise ValueError(f"centroids {a} and {b} coincide")

    @property
    def fullbody_class_id(self) -> int:
        return self.k

    @property
    def n_classes(self) -> int:
        return self.k + 1

    def nearest_part_class(self, desc: np.ndarray) -> int:
        d2 = ((self.centroids - np.asarray(desc, dtype=float)) ** 2).sum(axis=1)
        return int(np.argmin(d2))

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "centroids": [[float(v) for v in row] for row in self.centroids],
            "regressors": None if self.regressor is None else self.regressor.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "PartClassModel":
        reg = doc.get("regressors")
        return cls(
            k=int(doc["k"]),
            centroids=np.asarray(doc["centroids"], dtype=float),
            regressor=None if reg is None else FullBodyRegressor.from_json_dict(reg),
        )


def load_part_class_model(path: str | Path) -> PartClassModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid part-class model JSON: {e}", path=str(path)) from e
    return PartClassModel.from_json_dict(doc)


def save_part_class_model(model: PartClassModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_json_dict()) + "\n")


@dataclass(frozen=True)
class ProposalLabel:
    """Band label for one proposal: full body, a part class, or negative."""

    kind: str
    class_id: int | None

    _KINDS = ("fullbody", "part", "negative")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown label kind {self.kind!r}")
        if self.kind == "negative" and self.class_id is not None:
            raise ValueError("negative labels carry no class id")
        if self.kind != "negative" and self.class_id is None:
            raise ValueError(f"{self.kind} label requires a class id")

    @property
    def is_positive(self) -> bool:
        return self.kind != "negative"

    @classmethod
    def fullbody(cls, class_id: int) -> "ProposalLabel":
        return cls(kind="fullbody", class_id=class_id)

    @classmethod
    def part(cls, class_id: int) -> "ProposalLabel":
        return cls(kind="part", class_id=class_id)

    @classmethod
    def negative(cls) -> "ProposalLabel":
        return cls(kind="negative", class_id=None)


def _joints_strictly_inside(box: Box, pose: Pose2D) -> list[int]:
    out = []
    for idx in pose.visible_indices():
        x, y = pose.xy[idx]
        if box.contains_point(float(x), float(y), strict=True):
            out.append(int(idx))
    return out


def _induces_connected_subgraph(joints: Sequence[int], skeleton: Skeleton) -> bool:
    if not joints:
        return False
    inside = set(joints)
    adj = skeleton.adjacency()
    seen = {joints[0]}
    stack = [joints[0]]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v in inside and v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(inside)


def select_positive_proposals(
    proposals: Sequence[Box],
    gt_box: Box,
    pose: Pose2D,
    skeleton: Skeleton,
    n_connected: int = CONNECTED_JOINTS_REQUIRED,
) -> list[bool]:
    """Flag proposals that qualify as part training positives.

    A proposal is positive when it lies inside the full-body box and the
    visible joints strictly inside it number exactly `n_connected` and form
    a connected subgraph of the skeleton.
    """
    if pose.n_joints != skeleton.n_joints:
        raise ValueError(
            f"pose has {pose.n_joints} joints but skeleton expects {skeleton.n_joints}"
        )
    flags = []
    for p in proposals:
        if not gt_box.contains_box(p, tol=1e-7):
            flags.append(False)
            continue
        inside = _joints_strictly_inside(p, pose)
        flags.append(len(inside) == n_connected and _induces_connected_subgraph(inside, skeleton))
    return flags


def assign_class(
    part: Box,
    gt: Box,
    model: PartClassModel,
    fullbody_iou: float = FULLBODY_IOU_THRESHOLD,
    part_iou: float = PART_IOU_THRESHOLD,
) -> ProposalLabel:
    """Band a proposal by IoU with the full-body box.

    IoU above `fullbody_iou` labels it full body; IoU in
    [part_iou, fullbody_iou] assigns the nearest part-class centroid
    (squared euclidean, ties to the lowest index); anything below is
    negative.
    """
    from .geometry import iou as _iou

    overlap = _iou(part, gt)
    if overlap > fullbody_iou:
        return ProposalLabel.fullbody(model.fullbody_class_id)
    if overlap >= part_iou:
        return ProposalLabel.part(model.nearest_part_class(raw_descriptor(part, gt)))
    return ProposalLabel.negative()
