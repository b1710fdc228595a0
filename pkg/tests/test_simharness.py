import json

import numpy as np
import pytest

from pdqeval.errors import InvalidGrid
from pdqeval.formats import detections_to_dict
from pdqeval.model import ConventionalBox, ProbabilisticBox
from pdqeval.score import evaluate
from pdqeval.simharness import (
    SimConfig,
    border_boxes,
    label_distribution,
    random_rectangles_scene,
    run_sweep,
    simulate_detections,
    synthetic_square_scene,
)


def test_square_scene():
    ds = synthetic_square_scene()
    (gt,) = ds.gts(0)
    assert len(gt.segment) == 250000
    assert gt.segment.bounds == tuple(int(v) for v in gt.box.as_tuple())
    small = synthetic_square_scene(200, 50)
    assert len(small.gts(0)[0].segment) == 2500


def test_perfect_simulation_scores_one():
    ds = random_rectangles_scene(n_objects=20)
    r = evaluate(ds, simulate_detections(ds, SimConfig()).detections)
    assert r.pdq == pytest.approx(1.0, abs=1e-12)


def test_label_distribution():
    d = label_distribution(1, 0.7, 4)
    assert d[1] == 0.7 and d.sum() == pytest.approx(1.0)
    assert np.allclose(np.delete(d, 1), 0.1)


def test_reported_variance_picks_geometry():
    ds = random_rectangles_scene(n_objects=5)
    conv = simulate_detections(ds, SimConfig()).detections[0][0]
    prob = simulate_detections(ds, SimConfig(reported_variance=4.0)).detections[0][0]
    assert isinstance(conv.geometry, ConventionalBox)
    assert isinstance(prob.geometry, ProbabilisticBox)
    assert prob.geometry.top_left.covariance[0, 0] == 4.0


def test_same_seed_same_detections():
    ds = random_rectangles_scene(n_objects=30)
    cfg = SimConfig(seed=3, true_variance=9.0, reported_variance=9.0, miss_rate=0.2)
    a = json.dumps(detections_to_dict(simulate_detections(ds, cfg).detections))
    b = json.dumps(detections_to_dict(simulate_detections(ds, cfg).detections))
    c = json.dumps(detections_to_dict(simulate_detections(ds, SimConfig(seed=4, true_variance=9.0, reported_variance=9.0, miss_rate=0.2)).detections))
    assert a == b and a != c


def test_boxes_clipped_to_image():
    ds = random_rectangles_scene(n_objects=50)
    sim = simulate_detections(ds, SimConfig(true_variance=400.0))
    assert sim.clipped
    for f, dets in sim.detections.items():
        dims = ds.dims(f)
        for d in dets:
            b = d.box
            assert b.is_ordered and b.within(dims)


def test_miss_rate_expectation():
    ds = random_rectangles_scene(n_objects=2000, objects_per_frame=10)
    r = evaluate(ds, simulate_detections(ds, SimConfig(miss_rate=0.3)).detections)
    assert abs(r.pdq - 0.7) <= 0.03


def test_exact_miss_rate():
    ds = random_rectangles_scene(n_objects=100)
    sim = simulate_detections(ds, SimConfig(miss_rate=0.25, exact_miss=True))
    assert len(sim.missed) == 25


def test_duplicates_sweep_divides_exactly():
    res = run_sweep("duplicates", [1, 3], repetitions=1, dataset=random_rectangles_scene(n_objects=20))
    means = res.mean()
    assert means[3.0] == pytest.approx(means[1.0] / 3, abs=1e-12)
    single = run_sweep("duplicates", [3], repetitions=1, dataset=synthetic_square_scene(200, 50))
    assert single.mean()[3.0] == pytest.approx(1 / 3, abs=1e-12)
    assert single.mean("map")[3.0] == 1.0


def test_border_boxes_stay_on_border():
    ds = synthetic_square_scene(200, 50)
    boxes = border_boxes(ds.dims(0), 30)
    assert len(set(b.as_tuple() for b in boxes)) == 30
    for b in boxes:
        assert b.x0 == 0 or b.y0 == 0 or b.x1 == 199 or b.y1 == 199


def test_sweep_csv_is_deterministic(tmp_path):
    ds = random_rectangles_scene(n_objects=10)
    a = run_sweep("variance", [1.0, 4.0], repetitions=2, base=SimConfig(reported_variance=4.0), dataset=ds)
    b = run_sweep("variance", [1.0, 4.0], repetitions=2, base=SimConfig(reported_variance=4.0), dataset=ds, workers=3)
    assert a.to_csv() == b.to_csv()
    a.to_csv(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0].startswith("parameter,value")


@pytest.mark.parametrize("experiment, grid", [("variance", []), ("label_prob", [1.5]), ("nope", [1.0]), ("duplicates", [1.5])])
def test_invalid_grid(experiment, grid):
    with pytest.raises(InvalidGrid):
        run_sweep(experiment, grid, repetitions=1)
