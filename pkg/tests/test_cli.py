import json

import pytest

from pdqeval.cli import cli


def run(capsys, *argv):
    code = cli([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_evaluate_prints_table(capsys, fixture_paths, tmp_path):
    gt, det = fixture_paths
    code, out, _ = run(capsys, "evaluate", "--gt", gt, "--det", det, "--map", "--out", tmp_path / "r.json")
    assert code == 0
    header = out.splitlines()[0].split()
    assert header == ["PDQ", "mAP", "pPDQ", "Sp", "Lbl", "FG", "BG", "TP", "FP", "FN"]
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["fg_bg_reading"] == "mean_of_exp"


def test_threshold_removes_false_positives(capsys, fixture_paths, tmp_path):
    gt, det = fixture_paths
    pdq = {}
    for tau in ("0.05", "0.5"):
        out = tmp_path / f"{tau}.json"
        assert run(capsys, "evaluate", "--gt", gt, "--det", det, "--tau", tau, "--out", out)[0] == 0
        pdq[tau] = json.loads(out.read_text())["pdq"]
    assert pdq["0.5"] > pdq["0.05"]


@pytest.mark.parametrize("argv", [["evaluate", "--bogus"], ["evaluate"], ["frobnicate"], []])
def test_usage_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_validate(capsys, fixture_paths, tmp_path):
    gt, det = fixture_paths
    code, out, _ = run(capsys, "validate", "--gt", gt, "--det", det)
    assert code == 0 and out.strip() == "ok"
    bad = tmp_path / "bad.json"
    bad.write_text('{"images": [{"id": 0, "width": 4, "height": 4}], "categories": [{"id": 0, "name": "a"}],'
                   ' "annotations": [{"image_id": 0, "class_id": 0, "bbox": [3, 0, 1, 1]}]}')
    code, _, err = run(capsys, "validate", "--gt", bad)
    assert code == 1 and "BoxNotOrdered" in err


def test_malformed_input_exits_1(capsys, fixture_paths, tmp_path):
    gt, _ = fixture_paths
    bad = tmp_path / "det.json"
    bad.write_text("{")
    code, _, err = run(capsys, "evaluate", "--gt", gt, "--det", bad)
    assert code == 1 and "malformed_json" in err


def test_simulate_writes_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--experiment", "label_prob", "--grid", "0.5,1.0", "--reps", "2", "--out", tmp_path)
    assert code == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(lines) == 5
    assert "label_prob=1" in out


def test_simulate_rejects_bad_grid(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--experiment", "label_prob", "--grid", "2.0", "--reps", "1", "--out", tmp_path)
    assert code == 1 and "invalid_grid" in err


def test_render_overlay_and_heatmap(capsys, fixture_paths, tmp_path):
    gt, det = fixture_paths
    assert run(capsys, "render", "--gt", gt, "--det", det, "--frame", 0, "--out", tmp_path / "o.png")[0] == 0
    assert run(capsys, "render", "--gt", gt, "--det", det, "--frame", 0, "--heatmap", 0, "--out", tmp_path / "h.png")[0] == 0
    assert (tmp_path / "o.png").stat().st_size > 0 and (tmp_path / "h.png").stat().st_size > 0
    assert run(capsys, "render", "--gt", gt, "--det", det, "--frame", 99, "--out", tmp_path / "x.png")[0] == 1
