"""Regenerate the bundled example files in src/pdqeval/data/."""

from pathlib import Path

import numpy as np

from pdqeval.formats import detections_to_dict, ground_truth_to_dict, write_json
from pdqeval.model import (
    AxisAlignedBox,
    ConventionalBox,
    Dataset,
    Detection,
    GaussianCorner,
    GroundTruthObject,
    ImageDims,
    ProbabilisticBox,
)

OUT = Path(__file__).resolve().parents[1] / "src" / "pdqeval" / "data"
DIMS = ImageDims(64, 48)
CLASSES = ["person", "car", "dog"]


def ellipse_mask(cx, cy, rx, ry):
    yy, xx = np.mgrid[: DIMS.height, : DIMS.width]
    return ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0


def pbox(frame, tl, br, cov_tl, cov_br, probs):
    return Detection(frame, ProbabilisticBox(GaussianCorner(tl, cov_tl), GaussianCorner(br, cov_br)), probs)


def bbox(frame, box, probs):
    return Detection(frame, ConventionalBox(AxisAlignedBox(*box)), probs)


def main():
    gts = {
        0: [GroundTruthObject.from_mask(0, ellipse_mask(18, 20, 10, 7), 0), GroundTruthObject.from_box(0, (40, 10, 55, 30), 1)],
        1: [GroundTruthObject.from_box(1, (5, 5, 20, 25), 2)],
        2: [
            GroundTruthObject.from_box(2, (2, 2, 14, 14), 0),
            GroundTruthObject.from_box(2, (20, 20, 40, 40), 1),
            GroundTruthObject.from_mask(2, ellipse_mask(52, 14, 8, 10), 2),
        ],
        3: [],
    }
    dataset = Dataset([(f, DIMS) for f in range(4)], gts, CLASSES)
    d2 = np.diag([2.0, 2.0])
    corr = np.array([[3.0, 1.2], [1.2, 2.0]])
    dets = {
        0: [
            pbox(0, (8.5, 13.2), (27.6, 27.1), d2, d2, [0.8, 0.15, 0.05]),
            bbox(0, (41, 11, 56, 30), [0.1, 0.85, 0.05]),
            bbox(0, (0, 40, 10, 47), [0.3, 0.35, 0.35]),
        ],
        1: [bbox(1, (40, 30, 60, 45), [0.2, 0.1, 0.7]), bbox(1, (30, 2, 38, 10), [0.1, 0.2, 0.7])],
        2: [
            pbox(2, (2.3, 1.6), (14.2, 15.0), corr, corr, [0.9, 0.05, 0.05]),
            pbox(2, (19.0, 21.0), (41.0, 39.5), np.diag([4.0, 1.0]), np.diag([1.0, 4.0]), [0.05, 0.6, 0.35]),
            bbox(2, (44, 4, 60, 24), [0.1, 0.1, 0.8]),
            bbox(2, (25, 42, 30, 47), [0.34, 0.33, 0.33]),
            bbox(2, (50, 40, 63, 47), [0.4, 0.3, 0.3]),
        ],
        3: [bbox(3, (10, 10, 20, 20), [0.45, 0.45, 0.1])],
    }
    OUT.mkdir(parents=True, exist_ok=True)
    write_json(ground_truth_to_dict(dataset), OUT / "fixture_gt.json")
    write_json(detections_to_dict(dets), OUT / "fixture_det.json")


if __name__ == "__main__":
    main()
