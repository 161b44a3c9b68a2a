"""Shared fixtures and independent oracle implementations.

The oracles here deliberately avoid the library's code paths: IoU by pixel
rasterization, AP by pure-python PR enumeration, similarity alignment by a
generic least-squares solve. Tests compare library output against them.
"""

import numpy as np
import pytest

from tubekit import Box, Detection, DetectionStore, Skeleton
from tubekit.synthgen import canonical_skeleton


# ---------------------------------------------------------------- oracles


def pixel_iou(a: Box, b: Box) -> float:
    """IoU of integer-corner boxes by counting unit cells."""
    cells_a = {
        (i, j)
        for i in range(int(a.x1), int(a.x2))
        for j in range(int(a.y1), int(a.y2))
    }
    cells_b = {
        (i, j)
        for i in range(int(b.x1), int(b.x2))
        for j in range(int(b.y1), int(b.y2))
    }
    union = cells_a | cells_b
    if not union:
        return 0.0
    return len(cells_a & cells_b) / len(union)


def ap_enumeration(flags, n_gt: int) -> float:
    """All-point-interpolated AP from ranked TP flags, spelled out in full.

    Precision at each rank, envelope from the right, then the sum of
    (recall step) x (envelope precision) in rank order.
    """
    n = len(flags)
    if n == 0:
        return 0.0
    tp = []
    c = 0
    for f in flags:
        c += 1 if f else 0
        tp.append(c)
    precision = [tp[i] / (i + 1) for i in range(n)]
    recall = [tp[i] / n_gt for i in range(n)]
    for i in range(n - 2, -1, -1):
        precision[i] = max(precision[i], precision[i + 1])
    ap = 0.0
    prev = 0.0
    for i, f in enumerate(flags):
        if f:
            ap += (recall[i] - prev) * precision[i]
            prev = recall[i]
    return ap


def fit_similarity(lib_xy: np.ndarray, query_xy: np.ndarray):
    """Least-squares scale+translation via a generic linear solve.

    Unknowns (s, tx, ty); each joint contributes two equations. Returns
    (scale, translation, rms residual).
    """
    n = lib_xy.shape[0]
    design = np.zeros((2 * n, 3))
    design[0::2, 0] = lib_xy[:, 0]
    design[0::2, 1] = 1.0
    design[1::2, 0] = lib_xy[:, 1]
    design[1::2, 2] = 1.0
    target = query_xy.reshape(-1)
    sol, *_ = np.linalg.lstsq(design, target, rcond=None)
    s, tx, ty = sol
    residual = design @ sol - target
    rms = float(np.sqrt((residual**2).sum() / n))
    return float(s), (float(tx), float(ty)), rms


def ridge_by_augmentation(x: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Ridge with unregularized intercept, solved as an augmented lstsq.

    x already carries the trailing intercept column. The sqrt(lam) identity
    rows cover only the feature columns, a different computation path from
    the normal equations.
    """
    d = x.shape[1] - 1
    aug = np.zeros((d, d + 1))
    aug[:, :d] = np.eye(d) * np.sqrt(lam)
    x_full = np.vstack([x, aug])
    y_full = np.vstack([y, np.zeros((d, y.shape[1]))])
    sol, *_ = np.linalg.lstsq(x_full, y_full, rcond=None)
    return sol


# ---------------------------------------------------------------- builders


def make_detection(
    video="v",
    frame=0,
    class_id=5,
    box=Box(100, 100, 200, 300),
    score=0.9,
    feature=(1.0, 0.0),
    fullbody=None,
):
    return Detection(
        video=video,
        frame=frame,
        class_id=class_id,
        box=box,
        score=score,
        feature=np.asarray(feature, dtype=float),
        fullbody=fullbody,
    )


def static_person_store(
    n_frames=12,
    box=Box(200.0, 80.0, 330.0, 400.0),
    velocity=(0.0, 0.0),
    score=0.98,
    video="v",
    class_id=5,
    feature=(1.0, 0.0),
):
    """Perfect single-class detections of one moving box, fullbody stored."""
    store = DetectionStore()
    for f in range(n_frames):
        b = Box(
            box.x1 + velocity[0] * f,
            box.y1 + velocity[1] * f,
            box.x2 + velocity[0] * f,
            box.y2 + velocity[1] * f,
        )
        store.add(
            make_detection(
                video=video, frame=f, class_id=class_id, box=b, score=score,
                feature=feature, fullbody=b,
            )
        )
    return store


# ---------------------------------------------------------------- fixtures


@pytest.fixture(scope="session")
def skel13() -> Skeleton:
    return canonical_skeleton()


@pytest.fixture(scope="session")
def path_skeleton() -> Skeleton:
    # five joints in a chain: 0-1-2-3-4
    return Skeleton(
        joint_names=("a", "b", "c", "d", "e"),
        edges=((0, 1), (1, 2), (2, 3), (3, 4)),
    )
