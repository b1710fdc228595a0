"""COCO-style mean average precision, used as a comparison baseline.

Matching is greedy per frame in descending confidence (submission order on
ties). Each detection takes the ground-truth object of highest IoU; it is a
true positive only if that IoU exceeds the threshold and the object is still
unmatched. Otherwise it is a false positive, even if another unmatched object
also overlaps it enough.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import NoGroundTruth
from .model import AxisAlignedBox, Dataset, Detection, FrameId, GroundTruthObject

IOU_THRESHOLDS = tuple((50 + 5 * i) / 100 for i in range(10))
RECALL_LEVELS = tuple(i / 100 for i in range(101))


@dataclass(frozen=True)
class MatchRecord:
    class_id: int
    score: float
    is_tp: int
    frame: FrameId
    order: int


@dataclass(frozen=True)
class MapResult:
    map: float
    per_class: dict[int, float]
    per_threshold: dict[float, float]


def iou(a: AxisAlignedBox, b: AxisAlignedBox) -> float:
    """Intersection over union with inclusive pixel areas."""
    iw = min(a.x1, b.x1) - max(a.x0, b.x0) + 1
    ih = min(a.y1, b.y1) - max(a.y0, b.y0) + 1
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return float(inter / union) if union > 0 else 0.0


def _ordered(dets: Mapping[FrameId, Sequence[Detection]]) -> list[tuple[FrameId, int, Detection]]:
    """All detections tagged with their global submission index."""
    out = []
    order = 0
    for frame in sorted(dets):
        for det in dets[frame]:
            out.append((frame, order, det))
            order += 1
    return out


def greedy_assign(
    gts: Mapping[FrameId, Sequence[GroundTruthObject]],
    dets: Mapping[FrameId, Sequence[Detection]],
    class_id: int,
    iou_threshold: float,
) -> list[MatchRecord]:
    """TP/FP flags for every detection of ``class_id``, in matching order."""
    tagged = [t for t in _ordered(dets) if t[2].label == class_id]
    by_frame: dict[FrameId, list[tuple[int, Detection]]] = {}
    for frame, order, det in tagged:
        by_frame.setdefault(frame, []).append((order, det))
    records = []
    for frame in sorted(by_frame):
        frame_gts = [g for g in gts.get(frame, ()) if g.class_id == class_id]
        unmatched = set(range(len(frame_gts)))
        for order, det in sorted(by_frame[frame], key=lambda t: (-t[1].score, t[0])):
            z = 0
            if frame_gts:
                ious = [iou(g.box, det.box) for g in frame_gts]
                best = int(np.argmax(ious))
                if ious[best] > iou_threshold and best in unmatched:
                    z = 1
                    unmatched.discard(best)
            records.append(MatchRecord(class_id, det.score, z, frame, order))
    return records


def pr_curve(records: Sequence[MatchRecord], n_gt: int) -> tuple[np.ndarray, np.ndarray]:
    """Recall and precision after each detection, ranked by score then order."""
    ranked = sorted(records, key=lambda r: (-r.score, r.order))
    z = np.array([r.is_tp for r in ranked], dtype=np.int64)
    tp = np.cumsum(z)
    seen = np.arange(1, len(z) + 1)
    return tp / n_gt, tp / seen


def sampled_precision(recall: np.ndarray, precision: np.ndarray) -> np.ndarray:
    """Interpolated precision at the 101 recall levels.

    Each level takes the best precision at any recall at or above it, and 0
    above the highest recall reached.
    """
    smooth = np.maximum.accumulate(precision[::-1])[::-1] if len(precision) else precision
    levels = np.array(RECALL_LEVELS)
    idx = np.searchsorted(recall, levels, side="left")
    out = np.zeros(len(levels))
    ok = idx < len(recall)
    out[ok] = smooth[idx[ok]]
    return out


def average_precision(records: Sequence[MatchRecord], n_gt: int) -> float:
    if n_gt <= 0:
        raise NoGroundTruth("average precision needs at least one ground-truth object")
    recall, precision = pr_curve(records, n_gt)
    return float(np.mean(sampled_precision(recall, precision)))


def map_score(
    dataset: Dataset,
    detections: Mapping[FrameId, Sequence[Detection]],
    iou_thresholds: Sequence[float] = IOU_THRESHOLDS,
) -> MapResult:
    """Mean AP over IoU thresholds and over classes that have ground truth."""
    n_gt: dict[int, int] = {}
    for frame in dataset.frames:
        for g in dataset.gts(frame):
            n_gt[g.class_id] = n_gt.get(g.class_id, 0) + 1
    classes = sorted(n_gt)
    gts = {f: dataset.gts(f) for f in dataset.frames}
    table = np.zeros((len(iou_thresholds), len(classes)))
    for ti, thr in enumerate(iou_thresholds):
        for ci, c in enumerate(classes):
            table[ti, ci] = average_precision(greedy_assign(gts, detections, c, thr), n_gt[c])
    if not classes:
        return MapResult(0.0, {}, {float(t): 0.0 for t in iou_thresholds})
    return MapResult(
        map=float(table.mean()),
        per_class={c: float(table[:, ci].mean()) for ci, c in enumerate(classes)},
        per_threshold={float(t): float(table[ti].mean()) for ti, t in enumerate(iou_thresholds)},
    )
