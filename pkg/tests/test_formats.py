import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pdqeval.errors import MalformedJson, NonPSDCovariance, RleLengthMismatch, SchemaViolation, UnknownImageId
from pdqeval.formats import (
    detections_from_dict,
    detections_to_dict,
    ground_truth_from_dict,
    ground_truth_to_dict,
    parse_detections,
    parse_ground_truth,
    rle_decode,
    rle_encode,
)
from pdqeval.model import PixelSet


def gt_doc(**ann):
    a = {"image_id": 0, "class_id": 0, "bbox": [1, 1, 3, 2]}
    a.update(ann)
    return {
        "schema_version": 1,
        "images": [{"id": 0, "width": 6, "height": 4}],
        "categories": [{"id": 0, "name": "a"}, {"id": 1, "name": "b"}],
        "annotations": [a],
    }


def pbox_item(**kw):
    item = {
        "image_id": 0, "type": "pbox",
        "tl_mean": [1, 1], "tl_cov": [[1, 0], [0, 1]],
        "br_mean": [3, 2], "br_cov": [1, 0.2, 0.2, 1],
        "label_probs": [0.9, 0.1],
    }
    item.update(kw)
    return item


def test_rle_example():
    mask = np.array([[0, 1], [1, 1]], dtype=bool)
    # column-major: 0,1 | 1,1
    assert rle_encode(mask) == [1, 3]
    assert rle_encode(np.ones((2, 2), dtype=bool)) == [0, 4]


@settings(max_examples=100, deadline=None)
@given(arrays(bool, st.tuples(st.integers(1, 9), st.integers(1, 9))))
def test_rle_round_trip(mask):
    h, w = mask.shape
    assert np.array_equal(rle_decode(rle_encode(mask), w, h), mask)


def test_rle_length_mismatch():
    with pytest.raises(RleLengthMismatch):
        rle_decode([3, 2], 2, 2)


def test_minimal_ground_truth_fills_box():
    ds = ground_truth_from_dict(gt_doc())
    (gt,) = ds.gts(0)
    assert len(gt.segment) == 6
    assert gt.segment == PixelSet.from_box(gt.box)


def test_ground_truth_with_mask():
    mask = np.zeros((4, 6), dtype=bool)
    mask[1, 1:4] = True
    ds = ground_truth_from_dict(gt_doc(mask={"counts": rle_encode(mask)}))
    assert len(ds.gts(0)[0].segment) == 3
    doc = ground_truth_to_dict(ds)
    assert ground_truth_from_dict(doc).gts(0)[0] == ds.gts(0)[0]
    assert "mask" in doc["annotations"][0]
    assert "mask" not in ground_truth_to_dict(ground_truth_from_dict(gt_doc()))["annotations"][0]


@pytest.mark.parametrize(
    "doc, err",
    [
        (gt_doc(bbox=[1, 1, 3]), SchemaViolation),
        (gt_doc(image_id=4), UnknownImageId),
        (gt_doc(mask={"counts": [5]}), RleLengthMismatch),
        (gt_doc(bbox=[1, 1, 9, 2]), SchemaViolation),
        ({"schema_version": 2, "images": [], "categories": [], "annotations": []}, SchemaViolation),
    ],
)
def test_bad_ground_truth(doc, err):
    with pytest.raises(err):
        ground_truth_from_dict(doc)


def test_malformed_json_reports_position(tmp_path):
    p = tmp_path / "gt.json"
    p.write_text('{"images": [}')
    with pytest.raises(MalformedJson) as exc:
        parse_ground_truth(p)
    assert "line 1" in str(exc.value)


def test_bbox_detection():
    ds = ground_truth_from_dict(gt_doc())
    dets = detections_from_dict({"detections": [{"image_id": 0, "type": "bbox", "bbox": [1, 1, 3, 2], "label_probs": [1, 0]}]}, ds)
    assert dets[0][0].score == 1.0 and dets[0][0].label == 0


def test_pbox_detection_round_trip(tmp_path):
    ds = ground_truth_from_dict(gt_doc())
    doc = {"schema_version": 1, "detections": [pbox_item()]}
    dets = detections_from_dict(doc, ds)
    again = detections_from_dict(json.loads(json.dumps(detections_to_dict(dets))), ds)
    assert again[0][0] == dets[0][0]
    p = tmp_path / "d.json"
    p.write_text(json.dumps(doc))
    assert parse_detections(p, ds)[0][0] == dets[0][0]


@pytest.mark.parametrize(
    "item, err",
    [
        (pbox_item(tl_cov=[[1, 2], [2, 1]]), NonPSDCovariance),
        (pbox_item(label_probs=[1.0]), SchemaViolation),
        (pbox_item(label_probs=[0.5, 0.6]), SchemaViolation),
        (pbox_item(tl_cov=[[1, 0.3], [0.1, 1]]), SchemaViolation),
        (pbox_item(image_id=9), UnknownImageId),
        (pbox_item(type="ellipse"), SchemaViolation),
        (pbox_item(tl_mean=[5, 5]), SchemaViolation),
    ],
)
def test_bad_detections(item, err):
    ds = ground_truth_from_dict(gt_doc())
    with pytest.raises(err):
        detections_from_dict({"detections": [item]}, ds)


def test_bundled_fixture_round_trips(fixture_paths):
    gt_path, det_path = fixture_paths
    ds = parse_ground_truth(gt_path)
    dets = parse_detections(det_path, ds)
    ds2 = ground_truth_from_dict(ground_truth_to_dict(ds))
    assert all(ds.gts(f) == ds2.gts(f) for f in ds.frames)
    dets2 = detections_from_dict(detections_to_dict(dets), ds2)
    assert dets2 == dets
