import shutil
from pathlib import Path

import pytest

from modules.common.errors import InputError, InvalidArgumentError
from modules.m6 import (
    RunConfig,
    format_sweep,
    format_table,
    is_fragmented,
    load_scene,
    run_eval,
    sweep,
)
from modules.m6.dev_make_scenes import distractor_scene, fragmented_scene

SCENES = Path(__file__).resolve().parents[1] / "data" / "eval" / "scenes"
FRAGMENTED = SCENES / "fragmented"
DISTRACTOR = SCENES / "distractor"


def test_batteries_match_the_generator():
    for i in (0, 1, 17, 49):
        assert load_scene(FRAGMENTED / f"scene_{i:03d}.json") == fragmented_scene(i)
        assert load_scene(DISTRACTOR / f"scene_{i:03d}.json") == distractor_scene(i)
    assert len(list(FRAGMENTED.glob("*.json"))) == 50
    assert len(list(DISTRACTOR.glob("*.json"))) == 50


def test_fragmented_battery_multires_beats_low_only():
    report = run_eval(FRAGMENTED, RunConfig(), ["low_only", "multires"])
    assert not report.failed
    means = report.means()
    assert means["low_only"]["scenes"] == 50
    assert means["multires"]["recall_at_k"] - means["low_only"]["recall_at_k"] >= 0.05
    assert all(r.target_fragmented for r in report.records)


def test_distractor_battery_detection_never_hurts():
    report = run_eval(DISTRACTOR, RunConfig(), ["multires", "multires+ovd"])
    assert not report.failed
    base = report.recall_by_scene("multires")
    ovd = report.recall_by_scene("multires+ovd")
    assert set(base) == set(ovd) and len(base) == 50
    assert all(ovd[s] >= base[s] for s in base)
    strict = sum(1 for s in base if ovd[s] > base[s])
    assert strict >= 0.6 * len(base)


def test_eval_is_deterministic_across_workers():
    a = run_eval(DISTRACTOR, RunConfig(), ["multires+ovd"])
    b = run_eval(DISTRACTOR, RunConfig(), ["multires+ovd"], workers=4)
    assert a.to_dict() == b.to_dict()
    ids = [r.scene_id for r in a.records]
    assert ids == sorted(ids)


def test_empty_scene_dir(tmp_path):
    report = run_eval(tmp_path, RunConfig())
    assert report.records == [] and not report.failed
    assert report.to_dict()["means"] == {}


def test_missing_scene_dir(tmp_path):
    with pytest.raises(InputError):
        run_eval(tmp_path / "nope", RunConfig())


def test_unknown_method(tmp_path):
    with pytest.raises(InvalidArgumentError):
        run_eval(tmp_path, RunConfig(), ["best"])


def test_malformed_scene_is_recorded_and_run_continues(tmp_path):
    shutil.copy(DISTRACTOR / "scene_000.json", tmp_path / "a.json")
    (tmp_path / "b.json").write_text('{"grid_h": -1}')
    report = run_eval(tmp_path, RunConfig(), ["multires"])
    assert report.failed
    assert [e["scene_id"] for e in report.errors] == ["b"]
    assert [r.scene_id for r in report.records] == ["distractor_000"]
    table = format_table(report)
    assert "multires" in table and "failed scenes: b" in table


def test_metrics_are_in_unit_interval():
    report = run_eval(FRAGMENTED, RunConfig(), ["low_only"])
    for r in report.records:
        assert 0.0 <= r.recall_at_k <= 1.0
        assert 0.0 <= r.precision_at_k <= 1.0


def test_is_fragmented():
    assert is_fragmented(fragmented_scene(0))
    assert is_fragmented(distractor_scene(0))


def test_sweep_over_weights_and_windows(tmp_path):
    for i in range(3):
        shutil.copy(DISTRACTOR / f"scene_{i:03d}.json", tmp_path / f"s{i}.json")
    points = sweep(tmp_path, RunConfig(), weights=[0.0, 0.4], window_sizes=[896, 1792])
    assert [(p.window_px, p.weight_w) for p in points] == [
        (896, 0.0),
        (896, 0.4),
        (1792, 0.0),
        (1792, 0.4),
    ]
    assert points[0].stride_px == round(896 * 896 / 1232)
    base = run_eval(tmp_path, RunConfig(), ["multires"]).means()["multires"]["recall_at_k"]
    assert points[0].mean_recall == pytest.approx(base)
    assert points[1].mean_recall == pytest.approx(1.0)
    assert all(p.scenes == 3 for p in points)
    assert all(p.crop_px is None and p.method == "multires+ovd" for p in points)


def test_sweep_over_crop_sizes_per_method(tmp_path):
    for i in range(3):
        shutil.copy(FRAGMENTED / f"scene_{i:03d}.json", tmp_path / f"s{i}.json")
    points = sweep(
        tmp_path,
        RunConfig(),
        weights=[0.4],
        methods=["low_only", "multires"],
        crop_sizes=[112, 224],
    )
    assert [(p.crop_px, p.method) for p in points] == [
        (112, "low_only"),
        (112, "multires"),
        (224, "low_only"),
        (224, "multires"),
    ]
    base = run_eval(tmp_path, RunConfig(), ["low_only", "multires"]).means()
    assert points[0].mean_recall == pytest.approx(base["low_only"]["recall_at_k"])
    assert points[1].mean_recall == pytest.approx(base["multires"]["recall_at_k"])
    # a 224 px crop holds each target whole
    assert points[2].mean_recall == pytest.approx(1.0)
    table = format_sweep(points).splitlines()
    assert table[0].split()[:2] == ["crop", "method"]
    assert table[3].split()[:2] == ["224", "low_only"]
    with pytest.raises(InvalidArgumentError):
        sweep(tmp_path, RunConfig(), weights=[0.4], crop_sizes=[0])
