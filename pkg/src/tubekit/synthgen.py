"""Synthetic video corpora with exact ground truth.

Scenes contain stick-figure people with rigid limb proportions moving
linearly, optional occluder rectangles with time spans, and an optional
camera window track (pans and zooms) that projects scene coordinates onto
the frame. The generator emits everything the pipeline consumes: part
detections with features and full-body targets, dense ground-truth tubes,
sparse annotated frames, per-tube classification features, pose libraries,
and part-labeling training sets.

Determinism: one PRNG seeded per corpus drives every draw. Draw order is
fixed: for each scene in order, (1) each person's pose parameters, (2) for
each frame, for each person, for each part group in class order the
miss/jitter/score/feature/full-body draws, then the false-positive draws,
(3) per expected tube, the per-channel classification feature draws.
Rerunning with the same seed reproduces every output byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .amodal import save_poses
from .evalkit import GroundTruthInstance, save_groundtruth
from .fusion import TubeFeature, save_tube_features
from .geometry import Box, FrameExtent, Tube, TubeFrame
from .partmodel import Pose2D, Skeleton, save_skeleton
from .provider import Detection, DetectionStore, save_detections
from .tracker import save_tubes

__all__ = [
    "JOINT_NAMES",
    "SKELETON_EDGES",
    "PART_GROUPS",
    "PART_CLASS_NAMES",
    "FULLBODY_CLASS_ID",
    "canonical_skeleton",
    "PoseStyle",
    "LIBRARY_STYLE",
    "UPRIGHT_STYLE",
    "sample_unit_pose",
    "generate_poses",
    "PersonSpec",
    "OccluderSpec",
    "CameraSegment",
    "NoiseSpec",
    "SceneSpec",
    "SyntheticCorpus",
    "generate_corpus",
    "generate_training_set",
    "clean_scenes",
    "occlusion_scenes",
    "viewpoint_scenes",
    "multiclass_scenes",
    "multiperson_scenes",
]

JOINT_NAMES = (
    "head",
    "l_shoulder",
    "r_shoulder",
    "l_elbow",
    "r_elbow",
    "l_wrist",
    "r_wrist",
    "l_hip",
    "r_hip",
    "l_knee",
    "r_knee",
    "l_ankle",
    "r_ankle",
)

SKELETON_EDGES = (
    (0, 1),
    (0, 2),
    (1, 2),
    (1, 3),
    (3, 5),
    (2, 4),
    (4, 6),
    (1, 7),
    (2, 8),
    (7, 8),
    (7, 9),
    (9, 11),
    (8, 10),
    (10, 12),
)

# joint groups emitted as part detections; the last class is the full body
PART_GROUPS: tuple[tuple[int, ...], ...] = (
    (0, 1, 2),  # head + shoulders
    (1, 2, 7, 8),  # torso
    (7, 8, 9, 10, 11, 12),  # legs
    (1, 3, 5),  # left arm
    (2, 4, 6),  # right arm
    tuple(range(13)),  # full body
)
PART_CLASS_NAMES = ("head", "torso", "legs", "arm_left", "arm_right", "fullbody")
FULLBODY_CLASS_ID = len(PART_GROUPS) - 1
# larger, more complete parts detect slightly more confidently
BASE_SCORES = (0.92, 0.94, 0.96, 0.90, 0.90, 0.98)

IDENTITY_SLOTS = 4
FEATURE_DIM = IDENTITY_SLOTS + len(PART_GROUPS)
CHANNELS = ("traj", "rgb", "flow")
CHANNEL_SEPARATION = 2.0
CHANNEL_NOISE = 0.25


def canonical_skeleton() -> Skeleton:
    return Skeleton(joint_names=JOINT_NAMES, edges=SKELETON_EDGES)


@dataclass(frozen=True)
class PoseStyle:
    """Uniform ranges for the pose parameters, in radians except lean/sway."""

    lean: tuple[float, float] = (-0.08, 0.08)
    head_sway: tuple[float, float] = (-0.03, 0.03)
    arm_swing: tuple[float, float] = (-0.9, 0.9)
    elbow_bend: tuple[float, float] = (-0.4, 1.1)
    leg_spread: tuple[float, float] = (-0.45, 0.45)
    knee_bend: tuple[float, float] = (0.0, 0.6)


LIBRARY_STYLE = PoseStyle()
# scene people keep wrists above the hip line and legs near vertical, so a
# waist-high occluder reliably splits upper from lower body
UPRIGHT_STYLE = PoseStyle(
    lean=(-0.04, 0.04),
    head_sway=(-0.02, 0.02),
    arm_swing=(-0.55, 0.55),
    elbow_bend=(0.7, 1.3),
    leg_spread=(-0.16, 0.16),
    knee_bend=(0.0, 0.22),
)

_SHOULDER_Y = 0.20
_HIP_Y = 0.52
_SHOULDER_HALF = 0.13
_HIP_HALF = 0.09
_UPPER_ARM = 0.17
_FOREARM = 0.16
_THIGH = 0.25
_SHIN = 0.25
_HEAD_Y = 0.06


def sample_unit_pose(rng: np.random.Generator, style: PoseStyle = LIBRARY_STYLE) -> np.ndarray:
    """One stick figure of unit height, head near y=0, feet near y=1.

    Limb lengths are fixed fractions of the height; only the angles vary.
    Ten uniform draws in a fixed order: lean, head sway, left arm swing and
    bend, right arm swing and bend, left leg spread and knee, right leg
    spread and knee.
    """

    def u(rng_range: tuple[float, float]) -> float:
        return float(rng.uniform(rng_range[0], rng_range[1]))

    lean = u(style.lean)
    sway = u(style.head_sway)
    arm_l, bend_l = u(style.arm_swing), u(style.elbow_bend)
    arm_r, bend_r = u(style.arm_swing), u(style.elbow_bend)
    leg_l, knee_l = u(style.leg_spread), u(style.knee_bend)
    leg_r, knee_r = u(style.leg_spread), u(style.knee_bend)

    def x_off(y: float) -> float:
        return lean * (y - _HIP_Y)  # lean pivots at the hips

    pts = np.zeros((13, 2), dtype=float)
    pts[0] = (sway + x_off(_HEAD_Y), _HEAD_Y)
    pts[1] = (-_SHOULDER_HALF + x_off(_SHOULDER_Y), _SHOULDER_Y)
    pts[2] = (_SHOULDER_HALF + x_off(_SHOULDER_Y), _SHOULDER_Y)
    pts[7] = (-_HIP_HALF, _HIP_Y)
    pts[8] = (_HIP_HALF, _HIP_Y)

    def limb(start: np.ndarray, length: float, angle: float) -> np.ndarray:
        return start + length * np.array([math.sin(angle), math.cos(angle)])

    pts[3] = limb(pts[1], _UPPER_ARM, -abs(arm_l))  # left arm swings outward
    pts[5] = limb(pts[3], _FOREARM, -abs(arm_l) + bend_l)
    pts[4] = limb(pts[2], _UPPER_ARM, abs(arm_r))
    pts[6] = limb(pts[4], _FOREARM, abs(arm_r) - bend_r)
    pts[9] = limb(pts[7], _THIGH, -abs(leg_l))
    pts[11] = limb(pts[9], _SHIN, -abs(leg_l) + knee_l)
    pts[10] = limb(pts[8], _THIGH, abs(leg_r))
    pts[12] = limb(pts[10], _SHIN, abs(leg_r) - knee_r)
    return pts


def generate_poses(
    seed: int,
    count: int,
    style: PoseStyle = LIBRARY_STYLE,
    height_range: tuple[float, float] = (160.0, 280.0),
    origin: tuple[float, float] = (0.0, 0.0),
) -> list[Pose2D]:
    """Complete scene-scale poses. Per pose: one height draw, then the style draws."""
    rng = np.random.default_rng(seed)
    poses = []
    for _ in range(count):
        h = float(rng.uniform(*height_range))
        unit = sample_unit_pose(rng, style)
        poses.append(Pose2D.complete(unit * h + np.asarray(origin)))
    return poses


@dataclass(frozen=True)
class PersonSpec:
    """One person: size, top-center start position, constant velocity."""

    person_id: int
    height: float
    start: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    style: PoseStyle = UPRIGHT_STYLE


@dataclass(frozen=True)
class OccluderSpec:
    """Scene-space rectangle hiding joints during [first_frame, last_frame)."""

    box: Box
    first_frame: int
    last_frame: int

    def active(self, frame: int) -> bool:
        return self.first_frame <= frame < self.last_frame


@dataclass(frozen=True)
class CameraSegment:
    """Camera window starting at a frame; the window maps onto the full frame."""

    start_frame: int
    window: Box


@dataclass(frozen=True)
class NoiseSpec:
    box_jitter: float = 0.0  # std dev in pixels on emitted box corners
    score_noise: float = 0.0  # scores drop by |N(0, sigma)|
    feature_noise: float = 0.0  # std dev added to feature vectors
    fp_rate: float = 0.0  # expected false positives per frame (Poisson)
    miss_rate: float = 0.0  # chance a visible part detection is dropped


@dataclass(frozen=True)
class SceneSpec:
    """One synthetic video."""

    video: str
    label: str
    n_frames: int
    people: tuple[PersonSpec, ...]
    extent: FrameExtent = FrameExtent(640, 480)
    occluders: tuple[OccluderSpec, ...] = ()
    camera: tuple[CameraSegment, ...] = ()
    camera_blend: int = 0  # frames over which a window change is interpolated
    noise: NoiseSpec = NoiseSpec()
    fullbody_mode: str = "amodal"  # or "visible": targets cover visible joints only
    margin: float = 20.0
    annotated_frames: int = 5

    def __post_init__(self):
        if self.n_frames < 1:
            raise ValueError("scene needs at least one frame")
        if not self.people:
            raise ValueError("scene needs at least one person")
        if self.fullbody_mode not in ("amodal", "visible"):
            raise ValueError(f"unknown fullbody_mode {self.fullbody_mode!r}")
        if self.camera and self.camera[0].start_frame != 0:
            raise ValueError("first camera segment must start at frame 0")


def _window_at(scene: SceneSpec, frame: int) -> Box:
    full = Box(0.0, 0.0, float(scene.extent.width), float(scene.extent.height))
    if not scene.camera:
        return full
    segments = scene.camera
    active = 0
    for i, seg in enumerate(segments):
        if seg.start_frame <= frame:
            active = i
    cur = segments[active].window
    if active == 0 or scene.camera_blend <= 0:
        return cur
    start = segments[active].start_frame
    if frame >= start + scene.camera_blend:
        return cur
    prev = segments[active - 1].window
    t = (frame - start + 1) / (scene.camera_blend + 1)
    a = np.asarray(prev.as_tuple())
    b = np.asarray(cur.as_tuple())
    return Box(*(a + (b - a) * t))


def _project(pts: np.ndarray, window: Box, extent: FrameExtent) -> np.ndarray:
    sx = extent.width / window.width
    sy = extent.height / window.height
    out = np.empty_like(pts)
    out[:, 0] = (pts[:, 0] - window.x1) * sx
    out[:, 1] = (pts[:, 1] - window.y1) * sy
    return out


def _project_box(box: Box, window: Box, extent: FrameExtent) -> Box:
    sx = extent.width / window.width
    sy = extent.height / window.height
    return Box(
        (box.x1 - window.x1) * sx,
        (box.y1 - window.y1) * sy,
        (box.x2 - window.x1) * sx,
        (box.y2 - window.y1) * sy,
    )


def _joint_box(pts: np.ndarray, margin: float) -> Box:
    x1, y1 = pts.min(axis=0)
    x2, y2 = pts.max(axis=0)
    return Box(x1 - margin, y1 - margin, x2 + margin, y2 + margin)


def _clamp_box(box: Box, outer: Box) -> Box:
    return Box(
        max(box.x1, outer.x1),
        max(box.y1, outer.y1),
        min(box.x2, outer.x2),
        min(box.y2, outer.y2),
    )


def _clip_to_frame(box: Box, extent: FrameExtent) -> Box | None:
    x1 = max(box.x1, 0.0)
    y1 = max(box.y1, 0.0)
    x2 = min(box.x2, float(extent.width))
    y2 = min(box.y2, float(extent.height))
    if x1 >= x2 or y1 >= y2:
        return None
    return Box(x1, y1, x2, y2)


@dataclass
class SyntheticCorpus:
    """Everything one corpus generation run produced."""

    skeleton: Skeleton
    extent: FrameExtent
    scenes: list[SceneSpec]
    store: DetectionStore
    gt_tubes: list[Tube]
    gts: list[GroundTruthInstance]
    tube_features: list[TubeFeature]
    labels: list[str]
    seed: int

    def tubes_per_video(self) -> dict[str, int]:
        return {s.video: len(s.people) for s in self.scenes}

    def write(self, outdir: str | Path) -> dict[str, str]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = {
            "skeleton": outdir / "skeleton.json",
            "detections": outdir / "detections.jsonl",
            "groundtruth": outdir / "groundtruth.jsonl",
            "gt_tubes": outdir / "gt_tubes.jsonl",
            "tube_features": outdir / "tube_features.jsonl",
            "corpus": outdir / "corpus.json",
        }
        save_skeleton(self.skeleton, paths["skeleton"])
        save_detections(self.store, paths["detections"])
        save_groundtruth(self.gts, paths["groundtruth"])
        save_tubes(self.gt_tubes, paths["gt_tubes"])
        save_tube_features(self.tube_features, paths["tube_features"])
        manifest = {
            "extent": [self.extent.width, self.extent.height],
            "videos": [s.video for s in self.scenes],
            "labels": self.labels,
            "part_classes": list(PART_CLASS_NAMES),
            "feature_dim": FEATURE_DIM,
            "seed": self.seed,
            "tubes_per_video": self.tubes_per_video(),
            "n_frames": {s.video: s.n_frames for s in self.scenes},
        }
        paths["corpus"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return {k: str(v) for k, v in paths.items()}


def _emit_person_frame(
    scene: SceneSpec,
    person: PersonSpec,
    unit_pose: np.ndarray,
    frame: int,
    window: Box,
    rng: np.random.Generator,
    store: DetectionStore,
) -> Box:
    """Emit one person's detections for one frame; returns the amodal gt box."""
    extent = scene.extent
    origin = np.asarray(person.start) + np.asarray(person.velocity) * frame
    scene_xy = unit_pose * person.height + origin
    occluded = np.zeros(13, dtype=bool)
    for occ in scene.occluders:
        if occ.active(frame):
            inside = (
                (scene_xy[:, 0] >= occ.box.x1)
                & (scene_xy[:, 0] <= occ.box.x2)
                & (scene_xy[:, 1] >= occ.box.y1)
                & (scene_xy[:, 1] <= occ.box.y2)
            )
            occluded |= inside
    proj = _project(scene_xy, window, extent)
    in_frame = (
        (proj[:, 0] >= 0.0)
        & (proj[:, 0] <= extent.width)
        & (proj[:, 1] >= 0.0)
        & (proj[:, 1] <= extent.height)
    )
    visible = ~occluded & in_frame
    amodal_box = _joint_box(proj, scene.margin)
    if not visible.any():
        return amodal_box
    visible_box = _joint_box(proj[visible], scene.margin)
    target = amodal_box if scene.fullbody_mode == "amodal" else visible_box
    person_h = float(proj[:, 1].max() - proj[:, 1].min())
    pad = 0.05 * person_h
    noise = scene.noise
    for class_id, group in enumerate(PART_GROUPS):
        if not all(visible[j] for j in group):
            continue
        if noise.miss_rate > 0.0 and rng.uniform() < noise.miss_rate:
            continue
        tight = _joint_box(proj[list(group)], pad)
        part = _clip_to_frame(_clamp_box(tight, amodal_box), extent)
        if part is None:
            continue
        corners = np.asarray(part.as_tuple())
        if noise.box_jitter > 0.0:
            corners = corners + rng.normal(0.0, noise.box_jitter, 4)
        x1, y1, x2, y2 = corners
        x1, x2 = min(x1, x2), max(x1, x2)
        y1, y2 = min(y1, y2), max(y1, y2)
        clipped = _clip_to_frame(Box(x1, y1, max(x2, x1 + 1.0), max(y2, y1 + 1.0)), extent)
        if clipped is None:
            continue
        score = BASE_SCORES[class_id]
        if noise.score_noise > 0.0:
            score = score - abs(float(rng.normal(0.0, noise.score_noise)))
        score = min(max(score, 0.05), 1.0)
        feature = np.zeros(FEATURE_DIM, dtype=float)
        feature[person.person_id % IDENTITY_SLOTS] = 1.0
        feature[IDENTITY_SLOTS + class_id] = 1.0
        if noise.feature_noise > 0.0:
            feature = feature + rng.normal(0.0, noise.feature_noise, FEATURE_DIM)
        fullbody = target
        if noise.box_jitter > 0.0:
            fb = np.asarray(target.as_tuple()) + rng.normal(0.0, noise.box_jitter, 4)
            fullbody = Box(
                min(fb[0], fb[2]),
                min(fb[1], fb[3]),
                max(fb[2], fb[0] + 1.0),
                max(fb[3], fb[1] + 1.0),
            )
        store.add(
            Detection(
                video=scene.video,
                frame=frame,
                class_id=class_id,
                box=clipped,
                score=float(score),
                feature=feature,
                fullbody=fullbody,
            )
        )
    return amodal_box


def _emit_false_positives(
    scene: SceneSpec, frame: int, rng: np.random.Generator, store: DetectionStore
) -> None:
    noise = scene.noise
    if noise.fp_rate <= 0.0:
        return
    extent = scene.extent
    count = int(rng.poisson(noise.fp_rate))
    for _ in range(count):
        cx = float(rng.uniform(0.1, 0.9)) * extent.width
        cy = float(rng.uniform(0.1, 0.9)) * extent.height
        w = float(rng.uniform(30.0, 120.0))
        h = float(rng.uniform(40.0, 160.0))
        class_id = int(rng.integers(0, len(PART_GROUPS)))
        score = float(rng.uniform(0.25, 0.55))
        feature = rng.normal(0.0, 0.3, FEATURE_DIM)
        box = _clip_to_frame(Box.from_center(cx, cy, w, h), extent)
        if box is None:
            continue
        store.add(
            Detection(
                video=scene.video,
                frame=frame,
                class_id=class_id,
                box=box,
                score=score,
                feature=feature,
                fullbody=box,
            )
        )


def generate_corpus(scenes: Sequence[SceneSpec], seed: int) -> SyntheticCorpus:
    """Generate detections, ground truth, and tube features for `scenes`.

    A single PRNG seeded with `seed` drives all draws in the documented
    order, so the corpus is reproducible byte for byte.
    """
    if not scenes:
        raise ValueError("need at least one scene")
    extent = scenes[0].extent
    for s in scenes:
        if s.extent != extent:
            raise ValueError("all scenes in a corpus must share one frame extent")
    labels = sorted({s.label for s in scenes})
    rng = np.random.default_rng(seed)
    store = DetectionStore()
    gt_tubes: list[Tube] = []
    gts: list[GroundTruthInstance] = []
    features: list[TubeFeature] = []
    for scene in scenes:
        unit_poses = [sample_unit_pose(rng, p.style) for p in scene.people]
        boxes_per_person: list[list[TubeFrame]] = [[] for _ in scene.people]
        for frame in range(scene.n_frames):
            window = _window_at(scene, frame)
            for p_idx, person in enumerate(scene.people):
                amodal = _emit_person_frame(
                    scene, person, unit_poses[p_idx], frame, window, rng, store
                )
                boxes_per_person[p_idx].append(TubeFrame(frame=frame, box=amodal, score=1.0))
            _emit_false_positives(scene, frame, rng, store)
        ann = sorted(
            {int(round(f)) for f in np.linspace(0, scene.n_frames - 1, scene.annotated_frames)}
        )
        for p_idx, frames in enumerate(boxes_per_person):
            tube = Tube(video=scene.video, frames=frames)
            gt_tubes.append(tube)
            # annotations are in-frame boxes, like a human annotator would draw;
            # the dense tube keeps the amodal extent
            ann_boxes = [
                (f, _clip_to_frame(frames[f].box, scene.extent) or frames[f].box) for f in ann
            ]
            gts.append(
                GroundTruthInstance(video=scene.video, label=scene.label, frames=ann_boxes)
            )
        for t_idx in range(len(scene.people)):
            channels = {}
            for ch in CHANNELS:
                vec = rng.normal(0.0, CHANNEL_NOISE, len(labels) + 2)
                vec[labels.index(scene.label)] += CHANNEL_SEPARATION
                channels[ch] = vec
            features.append(TubeFeature(tube_id=f"{scene.video}:t{t_idx}", channels=channels))
    return SyntheticCorpus(
        skeleton=canonical_skeleton(),
        extent=extent,
        scenes=list(scenes),
        store=store,
        gt_tubes=gt_tubes,
        gts=gts,
        tube_features=features,
        labels=labels,
        seed=seed,
    )


def _clip_velocity(vx: float, start_x: float, n_frames: int, lo: float, hi: float) -> float:
    max_right = (hi - start_x) / n_frames
    max_left = (start_x - lo) / n_frames
    return float(min(max(vx, -max_left), max_right))


def clean_scenes(
    seed: int,
    n_videos: int,
    n_frames: int = 40,
    labels: Sequence[str] = ("walk", "wave"),
    noise: NoiseSpec = NoiseSpec(),
    extent: FrameExtent = FrameExtent(640, 480),
) -> list[SceneSpec]:
    """Fully visible people walking linearly; noiseless by default."""
    rng = np.random.default_rng(seed)
    scenes = []
    for i in range(n_videos):
        height = float(rng.uniform(210.0, 280.0))
        start_x = float(rng.uniform(230.0, 410.0))
        start_y = float(rng.uniform(30.0, 55.0))
        vx = _clip_velocity(float(rng.uniform(-1.8, 1.8)), start_x, n_frames, 180.0, 460.0)
        scenes.append(
            SceneSpec(
                video=f"clean{i:03d}",
                label=labels[i % len(labels)],
                n_frames=n_frames,
                extent=extent,
                people=(
                    PersonSpec(person_id=0, height=height, start=(start_x, start_y), velocity=(vx, 0.0)),
                ),
                noise=noise,
            )
        )
    return scenes


def occlusion_scenes(
    seed: int,
    n_videos: int,
    n_frames: int = 50,
    labels: Sequence[str] = ("sit", "drink"),
    fullbody_mode: str = "amodal",
    extent: FrameExtent = FrameExtent(640, 480),
) -> list[SceneSpec]:
    """People whose lower body disappears behind a rectangle mid-video.

    The occluder cuts at mid-torso height, so only the head-and-shoulders
    part survives the occluded stretch, which covers three of the five
    annotated frames. The same seed yields identical scenes for both
    full-body modes; only the stored regression targets differ.
    """
    rng = np.random.default_rng(seed)
    scenes = []
    for i in range(n_videos):
        height = float(rng.uniform(220.0, 290.0))
        start_x = float(rng.uniform(240.0, 400.0))
        start_y = float(rng.uniform(28.0, 48.0))
        vx = _clip_velocity(float(rng.uniform(-1.2, 1.2)), start_x, n_frames, 190.0, 450.0)
        cut = float(rng.uniform(0.29, 0.33))
        cut_y = start_y + cut * height
        x_lo = min(start_x, start_x + vx * n_frames) - 0.55 * height
        x_hi = max(start_x, start_x + vx * n_frames) + 0.55 * height
        first = int(round(0.12 * n_frames))
        last = int(round(0.92 * n_frames))
        scenes.append(
            SceneSpec(
                video=f"occl{i:03d}",
                label=labels[i % len(labels)],
                n_frames=n_frames,
                extent=extent,
                people=(
                    PersonSpec(person_id=0, height=height, start=(start_x, start_y), velocity=(vx, 0.0)),
                ),
                occluders=(
                    OccluderSpec(
                        box=Box(x_lo, cut_y, x_hi, float(extent.height) + 200.0),
                        first_frame=first,
                        last_frame=last,
                    ),
                ),
                noise=NoiseSpec(box_jitter=0.6, score_noise=0.015, feature_noise=0.02, fp_rate=0.15),
                fullbody_mode=fullbody_mode,
            )
        )
    return scenes


def viewpoint_scenes(
    seed: int,
    n_videos: int,
    n_frames: int = 60,
    labels: Sequence[str] = ("wave", "phone"),
    extent: FrameExtent = FrameExtent(640, 480),
) -> list[SceneSpec]:
    """Static people filmed full-body first, then zoomed to the upper body.

    The zoom starts about a quarter into the video and blends over 25
    frames to a window from just below the head to just above the ankles'
    reach, so the legs and full-body parts stop being detectable while the
    torso and arms remain. Two of the five annotated frames fall after the
    single tracked part of a one-part tracker has died.
    """
    rng = np.random.default_rng(seed)
    scenes = []
    for i in range(n_videos):
        height = float(rng.uniform(235.0, 275.0))
        start_x = float(rng.uniform(300.0, 340.0))
        start_y = float(rng.uniform(36.0, 50.0))
        top = start_y + 0.08 * height
        bottom = start_y + 0.90 * height
        win_h = bottom - top
        win_w = win_h * extent.width / extent.height
        switch = int(round(0.25 * n_frames))
        scenes.append(
            SceneSpec(
                video=f"view{i:03d}",
                label=labels[i % len(labels)],
                n_frames=n_frames,
                extent=extent,
                people=(PersonSpec(person_id=0, height=height, start=(start_x, start_y)),),
                camera=(
                    CameraSegment(0, Box(0.0, 0.0, float(extent.width), float(extent.height))),
                    CameraSegment(switch, Box(start_x - win_w / 2, top, start_x + win_w / 2, bottom)),
                ),
                camera_blend=25,
                noise=NoiseSpec(box_jitter=0.4, score_noise=0.01, feature_noise=0.02, fp_rate=0.1),
            )
        )
    return scenes


def multiclass_scenes(
    seed: int,
    n_videos: int,
    n_frames: int = 40,
    labels: Sequence[str] = ("run", "jump", "throw"),
    extent: FrameExtent = FrameExtent(640, 480),
) -> list[SceneSpec]:
    """Clean scenes over three classes with mild noise; used end to end."""
    base = clean_scenes(
        seed,
        n_videos,
        n_frames,
        labels=labels,
        noise=NoiseSpec(box_jitter=0.5, score_noise=0.015, feature_noise=0.02, fp_rate=0.2),
        extent=extent,
    )
    return [
        SceneSpec(
            video=f"mix{i:03d}",
            label=s.label,
            n_frames=s.n_frames,
            extent=s.extent,
            people=s.people,
            noise=s.noise,
        )
        for i, s in enumerate(base)
    ]


def multiperson_scenes(
    seed: int,
    n_videos: int,
    n_frames: int = 30,
    labels: Sequence[str] = ("duo",),
    extent: FrameExtent = FrameExtent(640, 480),
) -> list[SceneSpec]:
    """Two well-separated people per video, for suppression-based extraction."""
    rng = np.random.default_rng(seed)
    scenes = []
    for i in range(n_videos):
        h1 = float(rng.uniform(200.0, 240.0))
        h2 = float(rng.uniform(200.0, 240.0))
        scenes.append(
            SceneSpec(
                video=f"duo{i:03d}",
                label=labels[i % len(labels)],
                n_frames=n_frames,
                extent=extent,
                people=(
                    PersonSpec(person_id=0, height=h1, start=(170.0, 45.0), velocity=(0.8, 0.0)),
                    PersonSpec(person_id=1, height=h2, start=(470.0, 50.0), velocity=(-0.8, 0.0)),
                ),
            )
        )
    return scenes


def generate_training_set(
    seed: int,
    n_instances: int = 80,
    style: PoseStyle = LIBRARY_STYLE,
    margin: float = 20.0,
) -> tuple[list[Pose2D], list[tuple[int, Box]]]:
    """Poses plus box proposals for the part-labeling pipeline.

    Each instance contributes jittered near-full-body boxes, the canonical
    part-group boxes, a spread of random sub-boxes, and a few far
    negatives, all tagged with the instance index.
    """
    rng = np.random.default_rng(seed)
    poses: list[Pose2D] = []
    proposals: list[tuple[int, Box]] = []
    for idx in range(n_instances):
        h = float(rng.uniform(190.0, 300.0))
        unit = sample_unit_pose(rng, style)
        xy = unit * h + np.asarray((420.0, 60.0))
        pose = Pose2D.complete(xy)
        poses.append(pose)
        gt = _joint_box(xy, margin)
        for _ in range(2):  # near-duplicates of the full box
            jit = np.asarray(gt.as_tuple()) + rng.normal(0.0, 0.02 * h, 4)
            proposals.append((idx, Box(min(jit[0], jit[2] - 1.0), min(jit[1], jit[3] - 1.0), max(jit[2], jit[0] + 1.0), max(jit[3], jit[1] + 1.0))))
        pad = 0.05 * h
        for group in PART_GROUPS[:-1]:
            tight = _joint_box(xy[list(group)], pad)
            proposals.append((idx, _clamp_box(tight, gt)))
        for _ in range(25):  # random sub-boxes of the person region
            w = float(rng.uniform(0.18, 0.75)) * gt.width
            bh = float(rng.uniform(0.15, 0.7)) * gt.height
            cx = float(rng.uniform(gt.x1 + w / 2, gt.x2 - w / 2))
            cy = float(rng.uniform(gt.y1 + bh / 2, gt.y2 - bh / 2))
            proposals.append((idx, Box.from_center(cx, cy, w, bh)))
        for _ in range(3):  # far negatives barely touching the person
            w = float(rng.uniform(20.0, 50.0))
            bh = float(rng.uniform(20.0, 50.0))
            proposals.append((idx, Box(gt.x2 - 2.0, gt.y2 - 2.0, gt.x2 - 2.0 + w, gt.y2 - 2.0 + bh)))
    return poses, proposals
