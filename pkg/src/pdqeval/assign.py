"""Optimal per-frame matching of detections to ground-truth objects."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import Detection, GroundTruthObject, ImageDims
from .quality import PairQuality, quality_matrix
from .spatial import ProbabilityMap, SpatialConfig, build_probability_map

# pPDQ values below this carry no information and are treated as zero
UNDERFLOW_FLOOR = 1e-300


@dataclass(frozen=True)
class MatchedPair:
    gt_index: int
    det_index: int
    quality: PairQuality


@dataclass(frozen=True)
class FrameAssignment:
    pairs: list[MatchedPair]
    fn_gt: list[int]
    fp_det: list[int]
    frame: int = 0
    n_gt: int = field(default=0)
    n_det: int = field(default=0)

    @property
    def tp_count(self) -> int:
        return len(self.pairs)

    @property
    def ppdq_values(self) -> list[float]:
        return [p.quality.ppdq for p in self.pairs]


def hungarian_max(values: np.ndarray) -> list[tuple[int, int]]:
    """Row/column pairs of a one-to-one assignment maximising the total value.

    Rectangular inputs are zero-padded to square; pairs that land in the
    padding are dropped. Output is sorted by row.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError("value matrix must be 2-D")
    n_rows, n_cols = values.shape
    if n_rows == 0 or n_cols == 0:
        return []
    n = max(n_rows, n_cols)
    square = np.zeros((n, n))
    square[:n_rows, :n_cols] = values
    rows, cols = linear_sum_assignment(square, maximize=True)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if r < n_rows and c < n_cols]


def assign_frame(
    gts: list[GroundTruthObject],
    dets: list[Detection],
    dims: ImageDims,
    cfg: SpatialConfig | None = None,
    weight: float = 0.5,
    pmaps: list[ProbabilityMap] | None = None,
    frame: int = 0,
) -> FrameAssignment:
    """Match detections to objects maximising total pPDQ within one frame.

    An assigned pair with zero pPDQ is no match: its object becomes a false
    negative and its detection a false positive.
    """
    if pmaps is None:
        pmaps = [build_probability_map(d, dims, cfg) for d in dets]
    mat, records = quality_matrix(gts, dets, pmaps, weight)
    mat[mat < UNDERFLOW_FLOOR] = 0.0
    pairs = []
    matched_gt: set[int] = set()
    matched_det: set[int] = set()
    for i, j in hungarian_max(mat):
        if mat[i, j] > 0.0:
            pairs.append(MatchedPair(i, j, records[i][j]))
            matched_gt.add(i)
            matched_det.add(j)
    return FrameAssignment(
        pairs=pairs,
        fn_gt=[i for i in range(len(gts)) if i not in matched_gt],
        fp_det=[j for j in range(len(dets)) if j not in matched_det],
        frame=frame,
        n_gt=len(gts),
        n_det=len(dets),
    )
