"""End-to-end command-line runs: exit codes, manifests, and reproducibility."""

import json
from pathlib import Path

import numpy as np
import pytest

from tubekit import Pose2D
from tubekit.amodal import save_poses
from tubekit.cli import main
from tubekit.partmodel import save_skeleton
from tubekit.synthgen import canonical_skeleton, generate_poses

CORPUS_FILES = (
    "skeleton.json",
    "detections.jsonl",
    "groundtruth.jsonl",
    "gt_tubes.jsonl",
    "tube_features.jsonl",
    "corpus.json",
)


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "tubekit" in capsys.readouterr().out


def test_missing_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_bad_preset_flag_is_rejected_by_the_parser(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--preset", "bogus", "--out", str(tmp_path / "c")])
    assert exc.value.code == 2


def test_synth_without_out_exits_2(capsys):
    assert main(["synth"]) == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_preset_via_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"synth": {"preset": "bogus"}}))
    out = tmp_path / "corpus"
    assert main(["synth", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()
    assert "unknown preset" in capsys.readouterr().err


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"synth": {"bogus_key": 1}}))
    out = tmp_path / "corpus"
    assert main(["synth", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()
    assert "bogus_key" in capsys.readouterr().err


def test_flags_beat_config_beats_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"synth": {"videos": 3, "seed": 9, "frames": 8}}))
    out = tmp_path / "corpus"
    rc = main(["synth", "--config", str(cfg), "--seed", "4", "--out", str(out)])
    assert rc == 0
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["command"] == "synth"
    params = manifest["parameters"]
    assert params["videos"] == 3  # from the config file
    assert params["seed"] == 4  # flag wins over the config's 9
    assert params["preset"] == "clean"  # untouched default
    assert len(manifest["config_hash"]) == 64
    assert int(manifest["config_hash"], 16) >= 0
    assert set(manifest["versions"]) == {"tubekit", "python", "numpy"}
    corpus = json.loads((out / "corpus.json").read_text())
    assert corpus["seed"] == 4
    assert corpus["n_frames"] == {v: 8 for v in corpus["videos"]}


def test_synth_reruns_are_byte_identical(tmp_path):
    args = ["synth", "--preset", "clean", "--videos", "2", "--frames", "10", "--seed", "3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in CORPUS_FILES:
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, name


def test_synth_side_outputs(tmp_path):
    out = tmp_path / "corpus"
    rc = main(
        [
            "synth",
            "--preset",
            "clean",
            "--videos",
            "1",
            "--frames",
            "5",
            "--out",
            str(out),
            "--pose-library",
            "5",
            "--eval-poses",
            "4",
            "--training-instances",
            "2",
        ]
    )
    assert rc == 0
    assert len((out / "pose_library.jsonl").read_text().splitlines()) == 5
    assert len((out / "eval_poses.jsonl").read_text().splitlines()) == 4
    assert len((out / "training_poses.jsonl").read_text().splitlines()) == 2
    assert len((out / "training_proposals.jsonl").read_text().splitlines()) == 2 * 35


def test_missing_input_file_exits_2_before_writing(tmp_path, capsys):
    out = tmp_path / "model.json"
    rc = main(
        [
            "cluster-parts",
            "--poses",
            str(tmp_path / "nope.jsonl"),
            "--proposals",
            str(tmp_path / "nope2.jsonl"),
            "--skeleton",
            str(tmp_path / "nope3.json"),
            "--out",
            str(out),
        ]
    )
    assert rc == 2
    assert not out.exists()
    assert "no such file" in capsys.readouterr().err


def test_runtime_failure_removes_partial_outputs(tmp_path, capsys):
    skel_path = tmp_path / "skeleton.json"
    save_skeleton(canonical_skeleton(), skel_path)
    library = generate_poses(1, 4)
    lib_path = tmp_path / "library.jsonl"
    save_poses(library, lib_path)
    # one completable query first so the output file gains content, then a
    # single-joint query that cannot anchor a similarity fit
    visible = np.zeros(13, dtype=bool)
    visible[0] = True
    queries = [library[0], Pose2D(library[1].xy, visible)]
    q_path = tmp_path / "queries.jsonl"
    save_poses(queries, q_path)
    out = tmp_path / "completed.jsonl"
    rc = main(
        [
            "complete-pose",
            "--library",
            str(lib_path),
            "--skeleton",
            str(skel_path),
            "--poses",
            str(q_path),
            "--out",
            str(out),
        ]
    )
    assert rc == 1
    assert not out.exists()
    assert "error:" in capsys.readouterr().err


def test_full_pipeline_reaches_perfect_map(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    rc = main(
        ["synth", "--preset", "clean", "--videos", "4", "--frames", "20", "--seed", "11", "--out", str(corpus)]
    )
    assert rc == 0
    for name in CORPUS_FILES:
        assert (corpus / name).exists()

    reg = tmp_path / "regressors.json"
    rc = main(
        ["train-regressors", "--corpus", str(corpus), "--intercept-only", "--out", str(reg)]
    )
    assert rc == 0
    assert reg.exists() and reg.with_name(reg.name + ".manifest.json").exists()

    tubes = tmp_path / "tubes.jsonl"
    rc = main(
        ["build-tubes", "--corpus", str(corpus), "--regressors", str(reg), "--out", str(tubes)]
    )
    assert rc == 0
    assert len(tubes.read_text().splitlines()) == 4

    scores = tmp_path / "scores.jsonl"
    fusion = tmp_path / "fusion.json"
    rc = main(
        [
            "classify",
            "--tubes",
            str(tubes),
            "--features",
            str(corpus / "tube_features.jsonl"),
            "--groundtruth",
            str(corpus / "groundtruth.jsonl"),
            "--model-out",
            str(fusion),
            "--out",
            str(scores),
        ]
    )
    assert rc == 0
    score_lines = [json.loads(l) for l in scores.read_text().splitlines()]
    assert len(score_lines) == 4
    assert all(set(doc["scores"]) == {"walk", "wave"} for doc in score_lines)

    def evaluate(out_name: str) -> Path:
        out = tmp_path / out_name
        rc = main(
            [
                "evaluate",
                "--tubes",
                str(tubes),
                "--scores",
                str(scores),
                "--groundtruth",
                str(corpus / "groundtruth.jsonl"),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        return out

    m1 = evaluate("metrics_a.json")
    m2 = evaluate("metrics_b.json")
    assert m1.read_bytes() == m2.read_bytes()
    metrics = json.loads(m1.read_text())
    assert metrics["n_tubes"] == 4
    assert metrics["map"]["0.5"] == 1.0
    assert metrics["map"]["0.7"] == 1.0
    assert metrics["per_class"]["0.5"] == {"walk": 1.0, "wave": 1.0}
    assert "mAP@0.5=1.0000" in capsys.readouterr().out
