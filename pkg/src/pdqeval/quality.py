"""Pairwise quality between one ground-truth object and one detection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ClassIndexOutOfRange
from .model import Detection, GroundTruthObject, ImageDims
from .spatial import ProbabilityMap, SpatialConfig, build_probability_map


@dataclass(frozen=True)
class PairQuality:
    fg_loss: float
    bg_loss: float
    spatial: float
    label: float
    ppdq: float

    @property
    def fg_quality(self) -> float:
        return math.exp(-self.fg_loss)

    @property
    def bg_quality(self) -> float:
        return math.exp(-self.bg_loss)


ZERO_QUALITY = PairQuality(0.0, 0.0, 0.0, 0.0, 0.0)


def _overlap(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> tuple[int, int, int, int] | None:
    x0, y0 = max(a[0], b[0]), max(a[1], b[1])
    x1, y1 = min(a[2], b[2]), min(a[3], b[3])
    if x0 > x1 or y0 > y1:
        return None
    return x0, y0, x1, y1


def foreground_loss(gt: GroundTruthObject, pmap: ProbabilityMap) -> float:
    """Mean negative log-probability over the ground-truth segment.

    Segment pixels off the detection support count as ``-log(epsilon)``.
    """
    seg = gt.segment
    n = len(seg)
    if n == 0:
        raise ValueError("ground-truth segment is empty")
    ox, oy = seg.origin
    h, w = seg.mask.shape
    region = pmap.region
    hit = 0
    total = 0.0
    win = _overlap((ox, oy, ox + w - 1, oy + h - 1), region) if region is not None else None
    if win is not None:
        x0, y0, x1, y1 = win
        px, py = pmap.origin
        nlp = pmap.neg_log_p[y0 - py : y1 - py + 1, x0 - px : x1 - px + 1]
        sup = pmap.support[y0 - py : y1 - py + 1, x0 - px : x1 - px + 1]
        if seg.is_full:
            total = float(nlp.sum())
            hit = int(sup.sum())
        else:
            m = seg.mask[y0 - oy : y1 - oy + 1, x0 - ox : x1 - ox + 1]
            total = float(nlp[m].sum())
            hit = int((sup & m).sum())
    total += (n - hit) * -math.log(pmap.epsilon)
    return total / n


def background_loss(gt: GroundTruthObject, pmap: ProbabilityMap) -> float:
    """Loss for support pixels outside the ground-truth box, per segment pixel."""
    n = len(gt.segment)
    if n == 0:
        raise ValueError("ground-truth segment is empty")
    region = pmap.region
    if region is None:
        return 0.0
    b = gt.box
    win = _overlap((int(b.x0), int(b.y0), int(b.x1), int(b.y1)), region)
    if win is None:
        return pmap.bg_total / n
    px, py = pmap.origin
    x0, y0, x1, y1 = win[0] - px, win[1] - py, win[2] - px, win[3] - py
    q = pmap.neg_log_q
    total = float(q[:y0].sum()) + float(q[y1 + 1 :].sum())
    mid = q[y0 : y1 + 1]
    total += float(mid[:, :x0].sum()) + float(mid[:, x1 + 1 :].sum())
    return total / n


def spatial_quality(gt: GroundTruthObject, pmap: ProbabilityMap) -> float:
    return math.exp(-(foreground_loss(gt, pmap) + background_loss(gt, pmap)))


def label_quality(gt: GroundTruthObject, det: Detection) -> float:
    """Probability the detection gives the true class, whatever its rank."""
    if not 0 <= gt.class_id < det.label_dist.size:
        raise ClassIndexOutOfRange(f"class {gt.class_id} not in label distribution of length {det.label_dist.size}")
    return float(det.label_dist[gt.class_id])


def combine(spatial: float, label: float, weight: float = 0.5) -> float:
    """Weighted geometric mean ``spatial**weight * label**(1 - weight)``."""
    if spatial <= 0.0 or label <= 0.0:
        return 0.0
    return math.exp(weight * math.log(spatial) + (1.0 - weight) * math.log(label))


def pair_quality(
    gt: GroundTruthObject,
    det: Detection,
    dims: ImageDims,
    cfg: SpatialConfig | None = None,
    weight: float = 0.5,
    pmap: ProbabilityMap | None = None,
) -> PairQuality:
    """All quality components for one pair. Pass ``pmap`` to reuse a built map."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError("weight must lie in [0, 1]")
    if pmap is None:
        pmap = build_probability_map(det, dims, cfg)
    fg = foreground_loss(gt, pmap)
    bg = background_loss(gt, pmap)
    qs = math.exp(-(fg + bg))
    ql = label_quality(gt, det)
    return PairQuality(fg, bg, qs, ql, combine(qs, ql, weight))


def quality_matrix(
    gts: list[GroundTruthObject],
    dets: list[Detection],
    pmaps: list[ProbabilityMap],
    weight: float = 0.5,
) -> tuple[np.ndarray, list[list[PairQuality]]]:
    """pPDQ matrix (gts x dets) and the full pair records."""
    records = [[ZERO_QUALITY] * len(dets) for _ in gts]
    mat = np.zeros((len(gts), len(dets)))
    for i, gt in enumerate(gts):
        for j, (det, pmap) in enumerate(zip(dets, pmaps)):
            pq = pair_quality(gt, det, pmap.dims, weight=weight, pmap=pmap)
            records[i][j] = pq
            mat[i, j] = pq.ppdq
    return mat, records
