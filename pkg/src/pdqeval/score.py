"""Dataset-level PDQ and the component report."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .assign import FrameAssignment, assign_frame
from .errors import ClassIndexOutOfRange, InvalidDetection, NonPSDCovariance, UnknownFrame
from .model import Dataset, Detection, FrameId, validate_detections
from .spatial import SpatialConfig

# FG/BG averages are mean(exp(-L)) over TPs, not exp(-mean(L))
FG_BG_READING = "mean_of_exp"

TABLE_COLUMNS = ("PDQ", "pPDQ", "Sp", "Lbl", "FG", "BG", "TP", "FP", "FN")


@dataclass
class EvaluationReport:
    pdq: float
    tp_total: int
    fp_total: int
    fn_total: int
    avg_ppdq: float
    avg_spatial: float
    avg_label: float
    avg_fg_quality: float
    avg_bg_quality: float
    per_frame: list[FrameAssignment]
    label_threshold: float
    weight: float = 0.5
    warnings: list[str] = field(default_factory=list)
    map: float | None = None
    ap_per_class: dict[str, float] | None = None

    def table_row(self) -> dict[str, Any]:
        return {
            "PDQ": self.pdq,
            "pPDQ": self.avg_ppdq,
            "Sp": self.avg_spatial,
            "Lbl": self.avg_label,
            "FG": self.avg_fg_quality,
            "BG": self.avg_bg_quality,
            "TP": self.tp_total,
            "FP": self.fp_total,
            "FN": self.fn_total,
        }

    def format_table(self) -> str:
        """Human-readable table; quality columns are percentages."""
        row = self.table_row()
        cols = list(TABLE_COLUMNS)
        if self.map is not None:
            cols.insert(1, "mAP")
            row["mAP"] = self.map
        cells = [f"{100 * row[c]:.3f}" if c not in ("TP", "FP", "FN") else str(row[c]) for c in cols]
        widths = [max(len(c), len(v)) for c, v in zip(cols, cells)]
        header = "  ".join(c.rjust(w) for c, w in zip(cols, widths))
        line = "  ".join(v.rjust(w) for v, w in zip(cells, widths))
        return f"{header}\n{line}"

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "pdq": self.pdq,
            "ppdq": self.avg_ppdq,
            "sp": self.avg_spatial,
            "lbl": self.avg_label,
            "fg": self.avg_fg_quality,
            "bg": self.avg_bg_quality,
            "tp": self.tp_total,
            "fp": self.fp_total,
            "fn": self.fn_total,
            "tau": self.label_threshold,
            "weight": self.weight,
            "fg_bg_reading": FG_BG_READING,
            "warnings": list(self.warnings),
        }
        if self.map is not None:
            out["map"] = self.map
            out["ap_per_class"] = dict(self.ap_per_class or {})
        out["frames"] = [
            {
                "frame": fa.frame,
                "pairs": [
                    {
                        "gt": p.gt_index,
                        "det": p.det_index,
                        "ppdq": p.quality.ppdq,
                        "sp": p.quality.spatial,
                        "lbl": p.quality.label,
                        "fg_loss": p.quality.fg_loss,
                        "bg_loss": p.quality.bg_loss,
                    }
                    for p in fa.pairs
                ],
                "fn": list(fa.fn_gt),
                "fp": list(fa.fp_det),
            }
            for fa in self.per_frame
        ]
        return out


def filter_by_threshold(dets: Sequence[Detection], tau: float) -> list[Detection]:
    """Keep detections whose winning-class probability is at least ``tau``."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    return [d for d in dets if d.score >= tau]


def _check_detections(dataset: Dataset, detections: Mapping[FrameId, Sequence[Detection]]) -> None:
    for v in validate_detections(detections, dataset):
        if v.kind == "UnknownFrame":
            raise UnknownFrame(str(v))
        if v.kind == "LabelDistLength":
            raise ClassIndexOutOfRange(str(v))
        if v.kind == "NonPSDCovariance":
            raise NonPSDCovariance(str(v))
        raise InvalidDetection(str(v))


def evaluate(
    dataset: Dataset,
    detections: Mapping[FrameId, Sequence[Detection]],
    cfg: SpatialConfig | None = None,
    tau: float = 0.0,
    weight: float = 0.5,
    threads: int = 1,
    compute_map: bool = False,
) -> EvaluationReport:
    """Score ``detections`` against ``dataset``.

    PDQ is the total pPDQ of all matched pairs divided by the number of
    true positives, false positives and false negatives. The result does not
    depend on ``threads``.
    """
    cfg = cfg or SpatialConfig()
    _check_detections(dataset, detections)
    frames = sorted(dataset.frames)
    kept = {f: filter_by_threshold(detections.get(f, ()), tau) for f in frames}

    def run(frame: FrameId) -> FrameAssignment:
        return assign_frame(dataset.gts(frame), kept[frame], dataset.dims(frame), cfg, weight, frame=frame)

    if threads > 1 and len(frames) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_frame = list(pool.map(run, frames))
    else:
        per_frame = [run(f) for f in frames]

    report = aggregate(per_frame, tau, weight)
    if compute_map:
        from .baseline_map import map_score

        result = map_score(dataset, kept)
        report.map = result.map
        report.ap_per_class = {dataset.class_names[c]: ap for c, ap in result.per_class.items()}
    return report


def aggregate(per_frame: list[FrameAssignment], tau: float = 0.0, weight: float = 0.5) -> EvaluationReport:
    """Combine frame assignments, summing in ascending frame order."""
    per_frame = sorted(per_frame, key=lambda fa: fa.frame)
    pairs = [p.quality for fa in per_frame for p in fa.pairs]
    tp = len(pairs)
    fp = sum(len(fa.fp_det) for fa in per_frame)
    fn = sum(len(fa.fn_gt) for fa in per_frame)
    # exactly rounded, so independent of order and sharding
    total = math.fsum(q.ppdq for q in pairs)
    warnings = []
    denom = tp + fp + fn
    if denom == 0:
        pdq = 1.0
        warnings.append("empty_evaluation: no ground truth and no detections; PDQ reported as 1")
    else:
        pdq = total / denom

    def mean(values: list[float]) -> float:
        return math.fsum(values) / len(values) if values else 0.0

    return EvaluationReport(
        pdq=pdq,
        tp_total=tp,
        fp_total=fp,
        fn_total=fn,
        avg_ppdq=mean([q.ppdq for q in pairs]),
        avg_spatial=mean([q.spatial for q in pairs]),
        avg_label=mean([q.label for q in pairs]),
        avg_fg_quality=mean([q.fg_quality for q in pairs]),
        avg_bg_quality=mean([q.bg_quality for q in pairs]),
        per_frame=per_frame,
        label_threshold=tau,
        weight=weight,
        warnings=warnings,
    )
