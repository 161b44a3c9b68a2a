"""Part-conditioned tube tracking: anchoring, stepping, spawning, pruning."""

import numpy as np
import pytest

from tubekit import (
    Box,
    DetectionStore,
    TrackerConfig,
    build_tube,
    extract_tubes,
    iou,
    load_tubes,
    save_tubes,
)
from tubekit.tracker import (
    InstanceClassifier,
    PartTrack,
    TrackerState,
    initialize,
    step,
)

from conftest import make_detection, static_person_store


FULL = Box(100.0, 100.0, 200.0, 300.0)
TORSO = Box(120.0, 140.0, 180.0, 220.0)


def _person_store(n_frames=10, drop_full_frames=(), full_score=0.98, torso_score=0.94):
    """Full body plus torso, both with the stored full-body box."""
    store = DetectionStore()
    for f in range(n_frames):
        if f not in drop_full_frames:
            store.add(
                make_detection(
                    frame=f, class_id=5, box=FULL, score=full_score,
                    feature=(0.0, 1.0), fullbody=FULL,
                )
            )
        store.add(
            make_detection(
                frame=f, class_id=1, box=TORSO, score=torso_score,
                feature=(1.0, 0.0), fullbody=FULL,
            )
        )
    return store


# --------------------------------------------------------------- anchoring


def test_initialize_single_detection_is_anchor():
    det = make_detection(frame=4, score=0.6, fullbody=Box(90, 90, 210, 310))
    state = initialize(DetectionStore([det]), "v")
    assert state.anchor is det
    assert state.anchor_frame == 4
    assert set(state.keyframes) == {4}
    assert state.keyframes[4].box == Box(90, 90, 210, 310)
    assert state.tracks[0].class_id == det.class_id


def test_initialize_prefers_highest_score():
    low = make_detection(frame=0, score=0.7, fullbody=FULL)
    high = make_detection(frame=9, score=0.9, fullbody=FULL)
    state = initialize(DetectionStore([low, high]), "v")
    assert state.anchor is high


def test_initialize_score_tie_earliest_frame():
    late = make_detection(frame=7, score=0.9, fullbody=FULL)
    early = make_detection(frame=3, score=0.9, fullbody=FULL)
    state = initialize(DetectionStore([late, early]), "v")
    assert state.anchor is early


def test_initialize_full_tie_lowest_class():
    b = make_detection(frame=3, class_id=2, score=0.9, box=Box(400, 100, 500, 300), fullbody=FULL)
    a = make_detection(frame=3, class_id=1, score=0.9, box=Box(400, 100, 500, 300), fullbody=FULL)
    state = initialize(DetectionStore([b, a]), "v")
    assert state.anchor is a


def test_initialize_empty_video():
    with pytest.raises(ValueError):
        initialize(DetectionStore([make_detection(video="w")]), "v")


def test_initialize_spawns_covered_parts():
    state = initialize(_person_store(n_frames=1), "v")
    assert sorted(t.class_id for t in state.tracks) == [1, 5]
    assert state.keyframes[0].parts == (1, 5)


# ---------------------------------------------------------- perfect inputs


def test_static_person_tube_is_exact():
    store = static_person_store(n_frames=12)
    gt = Box(200.0, 80.0, 330.0, 400.0)
    tube = build_tube(store, "v")
    frames = [tf.frame for tf in tube.frames]
    assert frames == list(range(12))
    for tf in tube.frames:
        assert iou(tf.box, gt) >= 1.0 - 1e-12


def test_moving_person_tube_follows():
    store = static_person_store(n_frames=16, velocity=(4.0, 2.0))
    tube = build_tube(store, "v")
    assert [tf.frame for tf in tube.frames] == list(range(16))
    for tf in tube.frames:
        want = Box(200.0 + 4.0 * tf.frame, 80.0 + 2.0 * tf.frame,
                   330.0 + 4.0 * tf.frame, 400.0 + 2.0 * tf.frame)
        assert iou(tf.box, want) >= 0.98


def test_build_tube_deterministic():
    store = _person_store(n_frames=14)
    assert build_tube(store, "v") == build_tube(store, "v")


# ------------------------------------------------------------ prune bounds


def _manual_state(score, config=None):
    """One track whose classifier is all zeros, so combined == detector part."""
    config = config or TrackerConfig()
    det = make_detection(frame=0, class_id=1, box=TORSO, score=0.9,
                         feature=(0.0, 0.0), fullbody=FULL)
    track = PartTrack(
        class_id=1,
        box=TORSO,
        classifier=InstanceClassifier(weights=np.zeros(2)),
        birth_frame=0,
        last_combined=0.9,
        last_fullbody=FULL,
    )
    state = TrackerState(
        video="v", anchor_frame=0, anchor=det, tracks=[track],
        keyframes={0: None}, config=config,
    )
    store = DetectionStore([
        make_detection(frame=1, class_id=1, box=TORSO, score=score,
                       feature=(0.0, 0.0), fullbody=FULL),
    ])
    return state, store


def test_prune_survives_exactly_at_threshold():
    state, store = _manual_state(score=1.0)
    step(state, store, None, 1)
    assert state.alive
    assert len(state.tracks) == 1
    assert 1 in state.keyframes
    assert state.keyframes[1].box == FULL
    assert state.keyframes[1].score == 1.0


def test_prune_removes_just_below_threshold():
    state, store = _manual_state(score=0.999)
    step(state, store, None, 1)
    assert not state.alive
    assert state.tracks == []
    assert 1 not in state.keyframes


def test_prune_requires_fullbody_evidence():
    # same combined score, but no detection matches: the track cannot merge
    state, store = _manual_state(score=1.0)
    empty = DetectionStore([make_detection(frame=99, video="v")])
    step(state, empty, None, 1)
    assert not state.alive


def test_step_dead_state_rejected():
    state, store = _manual_state(score=0.5)
    step(state, store, None, 1)
    assert not state.alive
    with pytest.raises(ValueError):
        step(state, store, None, 2)


# ------------------------------------------------------------ spawn bounds


def _spawn_store(second_score):
    store = DetectionStore()
    store.add(make_detection(frame=0, class_id=5, box=FULL, score=0.9,
                             feature=(0.0, 1.0), fullbody=FULL))
    store.add(make_detection(frame=0, class_id=1, box=TORSO, score=second_score,
                             feature=(1.0, 0.0), fullbody=FULL))
    return store


def test_spawn_at_exact_threshold():
    state = initialize(_spawn_store(0.25), "v")
    assert sorted(t.class_id for t in state.tracks) == [1, 5]


def test_spawn_rejected_just_below_threshold():
    state = initialize(_spawn_store(0.2499), "v")
    assert [t.class_id for t in state.tracks] == [5]


def test_spawn_decides_well_clear_of_the_boundary():
    assert len(initialize(_spawn_store(0.3), "v").tracks) == 2
    assert len(initialize(_spawn_store(0.2), "v").tracks) == 1


def test_spawn_requires_containment():
    store = DetectionStore()
    store.add(make_detection(frame=0, class_id=5, box=FULL, score=0.9,
                             feature=(0.0, 1.0), fullbody=FULL))
    outside = Box(400.0, 400.0, 480.0, 500.0)
    store.add(make_detection(frame=0, class_id=1, box=outside, score=0.5,
                             feature=(1.0, 0.0), fullbody=outside))
    state = initialize(store, "v")
    assert [t.class_id for t in state.tracks] == [5]


def test_spawn_skips_tracked_class():
    store = _spawn_store(0.5)
    # an extra detection of the already-tracked full-body class
    store.add(make_detection(frame=0, class_id=5, box=Box(110, 110, 190, 290),
                             score=0.5, feature=(0.0, 1.0), fullbody=FULL))
    state = initialize(store, "v")
    assert sorted(t.class_id for t in state.tracks) == [1, 5]


def test_spawn_respects_max_parts():
    store = _spawn_store(0.5)
    legs = Box(120.0, 220.0, 180.0, 295.0)
    store.add(make_detection(frame=0, class_id=2, box=legs, score=0.4,
                             feature=(0.5, 0.5), fullbody=FULL))
    capped = initialize(store, "v", config=TrackerConfig(max_parts=2))
    assert len(capped.tracks) == 2
    # the higher-scoring torso wins the single spawn slot
    assert sorted(t.class_id for t in capped.tracks) == [1, 5]
    free = initialize(store, "v")
    assert sorted(t.class_id for t in free.tracks) == [1, 2, 5]


# ------------------------------------------------------------- occlusion


def test_tube_survives_fullbody_dropout():
    """Torso evidence carries the tube while the full-body class is missing."""
    occluded = set(range(8, 13))
    store = _person_store(n_frames=20, drop_full_frames=occluded)
    config = TrackerConfig(keyframe_stride=1)
    tube = build_tube(store, "v", config=config)
    assert [tf.frame for tf in tube.frames] == list(range(20))
    for tf in tube.frames:
        assert iou(tf.box, FULL) >= 1.0 - 1e-9


# ------------------------------------------------------------ suppression


def test_extract_tubes_suppression():
    # distinct features: the instance classifiers must tell the people apart
    left = static_person_store(n_frames=10, box=Box(100.0, 80.0, 230.0, 400.0),
                               feature=(1.0, 0.0))
    right = static_person_store(n_frames=10, box=Box(500.0, 80.0, 630.0, 400.0),
                                score=0.9, feature=(0.0, 1.0))
    store = DetectionStore(list(left) + list(right))
    tubes = extract_tubes(store, "v", max_tubes=2)
    assert len(tubes) == 2
    # best-scoring person first, the other after suppression
    assert iou(tubes[0].frames[0].box, Box(100, 80, 230, 400)) >= 1.0 - 1e-12
    assert iou(tubes[1].frames[0].box, Box(500, 80, 630, 400)) >= 1.0 - 1e-12
    assert len(extract_tubes(store, "v", max_tubes=1)) == 1


def test_extract_tubes_stops_when_video_empty():
    store = static_person_store(n_frames=6)
    tubes = extract_tubes(store, "v", max_tubes=5)
    # one person: suppression clears the video, extraction stops early
    assert len(tubes) == 1


# -------------------------------------------------------------------- IO


def test_tube_save_load_roundtrip(tmp_path):
    store = _person_store(n_frames=9)
    tube = build_tube(store, "v")
    path = tmp_path / "tubes.jsonl"
    save_tubes([tube], path)
    back = load_tubes(path)
    assert back == [tube]


def test_tracker_config_validation():
    with pytest.raises(ValueError):
        TrackerConfig(max_parts=0)
    with pytest.raises(ValueError):
        TrackerConfig(keyframe_stride=0)
    with pytest.raises(ValueError):
        TrackerConfig(scales=())
