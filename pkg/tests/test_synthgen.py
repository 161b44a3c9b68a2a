"""Synthetic corpus generator: determinism, geometry, and noise invariants."""

import json
from collections import Counter

import numpy as np
import pytest

from tubekit import Box, FrameExtent, pose_to_box
from tubekit.synthgen import (
    BASE_SCORES,
    CHANNELS,
    FEATURE_DIM,
    FULLBODY_CLASS_ID,
    IDENTITY_SLOTS,
    JOINT_NAMES,
    LIBRARY_STYLE,
    PART_CLASS_NAMES,
    PART_GROUPS,
    SKELETON_EDGES,
    UPRIGHT_STYLE,
    canonical_skeleton,
    clean_scenes,
    generate_corpus,
    generate_poses,
    generate_training_set,
    multiclass_scenes,
    multiperson_scenes,
    occlusion_scenes,
    viewpoint_scenes,
)

EXTENT = FrameExtent(640, 480)


@pytest.fixture(scope="module")
def clean_corpus():
    return generate_corpus(clean_scenes(5, 3), seed=401)


@pytest.fixture(scope="module")
def occl_corpus():
    return generate_corpus(occlusion_scenes(11, 2), seed=402)


@pytest.fixture(scope="module")
def view_corpus():
    return generate_corpus(viewpoint_scenes(3, 2), seed=403)


@pytest.fixture(scope="module")
def mix_corpus():
    return generate_corpus(multiclass_scenes(7, 3), seed=404)


# ---------------------------------------------------------------- poses


def test_generate_poses_deterministic():
    a = generate_poses(12, 8)
    b = generate_poses(12, 8)
    c = generate_poses(13, 8)
    for pa, pb in zip(a, b):
        assert np.array_equal(pa.xy, pb.xy)
    assert any(not np.array_equal(pa.xy, pc.xy) for pa, pc in zip(a, c))


def test_generated_poses_are_complete_13_joint_figures():
    poses = generate_poses(3, 20)
    assert len(poses) == 20
    for p in poses:
        assert p.n_joints == len(JOINT_NAMES) == 13
        assert all(p.visible)
        assert np.isfinite(p.xy).all()


def test_generate_poses_origin_shift_is_a_pure_translation():
    base = generate_poses(9, 6)
    moved = generate_poses(9, 6, origin=(500.0, 300.0))
    for p, m in zip(base, moved):
        assert np.array_equal(p.xy + np.array([500.0, 300.0]), m.xy)


def test_upright_style_keeps_wrists_above_the_hip_line():
    # a waist-high occluder must split these figures cleanly in two
    poses = generate_poses(21, 300, style=UPRIGHT_STYLE)
    for p in poses:
        hip_y = min(p.xy[7, 1], p.xy[8, 1])
        assert p.xy[5, 1] < hip_y
        assert p.xy[6, 1] < hip_y


def test_library_style_reaches_below_the_hip_line():
    poses = generate_poses(21, 300, style=LIBRARY_STYLE)
    below = [
        p
        for p in poses
        if max(p.xy[5, 1], p.xy[6, 1]) > max(p.xy[7, 1], p.xy[8, 1])
    ]
    assert below, "library poses should explore wrist positions below the hips"


def test_canonical_skeleton_layout():
    skel = canonical_skeleton()
    assert skel.joint_names == JOINT_NAMES
    assert len(skel.joint_names) == 13
    assert len(skel.edges) == len(SKELETON_EDGES) == 14
    assert PART_GROUPS[FULLBODY_CLASS_ID] == tuple(range(13))
    assert len(PART_CLASS_NAMES) == len(PART_GROUPS) == len(BASE_SCORES)


# ---------------------------------------------------------------- corpora


def test_corpus_write_is_byte_identical_across_runs(tmp_path):
    paths_a = generate_corpus(clean_scenes(5, 3), seed=401).write(tmp_path / "a")
    paths_b = generate_corpus(clean_scenes(5, 3), seed=401).write(tmp_path / "b")
    assert set(paths_a) == {
        "skeleton",
        "detections",
        "groundtruth",
        "gt_tubes",
        "tube_features",
        "corpus",
    }
    for key in paths_a:
        with open(paths_a[key], "rb") as fa, open(paths_b[key], "rb") as fb:
            assert fa.read() == fb.read(), key


def test_corpus_manifest_fields(clean_corpus, tmp_path):
    paths = clean_corpus.write(tmp_path)
    manifest = json.loads((tmp_path / "corpus.json").read_text())
    assert set(manifest) == {
        "extent",
        "videos",
        "labels",
        "part_classes",
        "feature_dim",
        "seed",
        "tubes_per_video",
        "n_frames",
    }
    assert manifest["extent"] == [640, 480]
    assert manifest["videos"] == ["clean000", "clean001", "clean002"]
    assert manifest["labels"] == sorted(manifest["labels"])
    assert manifest["part_classes"] == list(PART_CLASS_NAMES)
    assert manifest["feature_dim"] == FEATURE_DIM
    assert manifest["seed"] == 401
    assert all(v == 1 for v in manifest["tubes_per_video"].values())
    assert paths["corpus"].endswith("corpus.json")


def test_clean_corpus_is_noise_free_and_exact(clean_corpus):
    corpus = clean_corpus
    tube_by_video = {t.video: t for t in corpus.gt_tubes}
    for scene in corpus.scenes:
        for f in range(scene.n_frames):
            dets = corpus.store.at(scene.video, f)
            assert len(dets) == len(PART_GROUPS) == 6
            assert sorted(d.class_id for d in dets) == list(range(6))
            gt_box = tube_by_video[scene.video].frames[f].box
            for d in dets:
                assert d.score == BASE_SCORES[d.class_id]
                expected = np.zeros(FEATURE_DIM)
                expected[0] = 1.0  # person id 0
                expected[IDENTITY_SLOTS + d.class_id] = 1.0
                assert np.array_equal(np.asarray(d.feature), expected)
                # noiseless: every part carries the exact amodal target
                assert d.fullbody == gt_box


def test_detection_boxes_stay_inside_the_frame(occl_corpus, view_corpus, mix_corpus):
    for corpus in (occl_corpus, view_corpus, mix_corpus):
        assert len(corpus.store) > 0
        for det in corpus.store:
            b = det.box
            assert 0.0 <= b.x1 < b.x2 <= EXTENT.width
            assert 0.0 <= b.y1 < b.y2 <= EXTENT.height
            assert 0.05 <= det.score <= 1.0


def test_gt_tubes_are_dense_and_annotations_are_clipped(view_corpus):
    for scene, tube, gt in zip(
        view_corpus.scenes, view_corpus.gt_tubes, view_corpus.gts
    ):
        assert tube.video == scene.video == gt.video
        assert [fr.frame for fr in tube.frames] == list(range(scene.n_frames))
        assert len(gt.frames) == scene.annotated_frames
        for _, box in gt.frames:
            assert 0.0 <= box.x1 < box.x2 <= EXTENT.width
            assert 0.0 <= box.y1 < box.y2 <= EXTENT.height


def test_viewpoint_gt_extends_past_the_frame_after_the_zoom(view_corpus):
    # once the camera has zoomed onto the upper body, the full-body ground
    # truth keeps covering the whole person, which no longer fits the frame
    for tube in view_corpus.gt_tubes:
        last = tube.frames[-1].box
        assert last.y1 < 0.0
        assert last.y2 > EXTENT.height
        first = tube.frames[0].box
        assert 0.0 <= first.y1 and first.y2 <= EXTENT.height


def test_occlusion_hides_everything_but_the_head(occl_corpus):
    n_frames = occl_corpus.scenes[0].n_frames
    first, last = round(0.12 * n_frames), round(0.92 * n_frames)
    for scene in occl_corpus.scenes:
        occ = scene.occluders[0]
        assert (occ.first_frame, occ.last_frame) == (first, last)
        for f in range(scene.n_frames):
            # scores >= 0.7 isolate the person's own detections from the
            # uniform false positives, whose scores top out at 0.55
            person = [d for d in occl_corpus.store.at(scene.video, f) if d.score >= 0.7]
            classes = sorted(d.class_id for d in person)
            if first <= f < last:
                assert classes == [0], f"frame {f}"
            else:
                assert classes == list(range(6)), f"frame {f}"


def test_amodal_and_visible_modes_differ_only_in_targets(tmp_path):
    amodal = generate_corpus(occlusion_scenes(9, 2, fullbody_mode="amodal"), seed=77)
    visible = generate_corpus(occlusion_scenes(9, 2, fullbody_mode="visible"), seed=77)
    assert len(amodal.store) == len(visible.store)
    n_diff = 0
    for da, dv in zip(amodal.store, visible.store):
        assert (da.video, da.frame, da.class_id) == (dv.video, dv.frame, dv.class_id)
        assert da.box == dv.box
        assert da.score == dv.score
        assert np.array_equal(np.asarray(da.feature), np.asarray(dv.feature))
        if da.fullbody != dv.fullbody:
            n_diff += 1
    assert n_diff > 0, "occluded frames must yield different regression targets"
    pa = amodal.write(tmp_path / "amodal")
    pv = visible.write(tmp_path / "visible")
    for key in ("skeleton", "groundtruth", "gt_tubes", "tube_features"):
        with open(pa[key], "rb") as fa, open(pv[key], "rb") as fb:
            assert fa.read() == fb.read(), key


def test_tube_features_peak_at_the_scene_label(mix_corpus):
    labels = mix_corpus.labels
    assert labels == sorted(labels) == ["jump", "run", "throw"]
    label_by_video = {s.video: s.label for s in mix_corpus.scenes}
    assert len(mix_corpus.tube_features) == len(mix_corpus.scenes)
    for feat in mix_corpus.tube_features:
        video, suffix = feat.tube_id.split(":")
        assert suffix == "t0"
        want = labels.index(label_by_video[video])
        assert set(feat.channels) == set(CHANNELS)
        for vec in feat.channels.values():
            arr = np.asarray(vec)
            assert arr.shape == (len(labels) + 2,)
            assert int(arr.argmax()) == want


def test_multiperson_scenes_produce_two_distinct_identities():
    corpus = generate_corpus(multiperson_scenes(2, 2), seed=405)
    assert corpus.tubes_per_video() == {"duo000": 2, "duo001": 2}
    assert len(corpus.gt_tubes) == 4
    assert len(corpus.tube_features) == 4
    ids = set()
    for det in corpus.store:
        slot = int(np.asarray(det.feature)[:IDENTITY_SLOTS].argmax())
        ids.add(slot)
    assert ids == {0, 1}


def test_generate_corpus_validations():
    with pytest.raises(ValueError):
        generate_corpus([], seed=1)
    a = clean_scenes(1, 1)[0]
    b = clean_scenes(1, 1, extent=FrameExtent(320, 240))[0]
    with pytest.raises(ValueError):
        generate_corpus([a, b], seed=1)


# ---------------------------------------------------------------- training set


def test_training_set_counts_and_determinism():
    poses_a, props_a = generate_training_set(31, n_instances=6)
    poses_b, props_b = generate_training_set(31, n_instances=6)
    assert len(poses_a) == 6
    assert len(props_a) == 6 * 35
    counts = Counter(idx for idx, _ in props_a)
    assert counts == {i: 35 for i in range(6)}
    for (ia, ba), (ib, bb) in zip(props_a, props_b):
        assert ia == ib and ba == bb
    for pa, pb in zip(poses_a, poses_b):
        assert np.array_equal(pa.xy, pb.xy)


def test_training_proposals_cluster_inside_the_person_box():
    poses, props = generate_training_set(31, n_instances=6, margin=20.0)
    for idx, pose in enumerate(poses):
        gt = pose_to_box(pose, margin=20.0)
        mine = [b for i, b in props if i == idx]
        inside = [
            b
            for b in mine
            if b.x1 >= gt.x1 - 1e-6
            and b.y1 >= gt.y1 - 1e-6
            and b.x2 <= gt.x2 + 1e-6
            and b.y2 <= gt.y2 + 1e-6
        ]
        # 5 part-group boxes and 25 sub-boxes are contained by construction;
        # the far negatives poke out past the bottom-right corner
        assert len(inside) >= 30
        assert len(inside) < len(mine)
        for b in mine:
            assert b.x2 > b.x1 and b.y2 > b.y1
