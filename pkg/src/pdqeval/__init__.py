"""Probability-based Detection Quality (PDQ) evaluation."""

from .assign import FrameAssignment, assign_frame, hungarian_max
from .baseline_map import average_precision, greedy_assign, iou, map_score
from .model import (
    AxisAlignedBox,
    ConventionalBox,
    Dataset,
    Detection,
    GaussianCorner,
    GroundTruthObject,
    ImageDims,
    PixelSet,
    ProbabilisticBox,
    validate_dataset,
    validate_detections,
)
from .quality import PairQuality, pair_quality
from .score import EvaluationReport, evaluate, filter_by_threshold
from .spatial import ProbabilityMap, SpatialConfig, build_probability_map, bvn_rect_prob, pixel_probability

__version__ = "0.1.0"

__all__ = [
    "AxisAlignedBox",
    "ConventionalBox",
    "Dataset",
    "Detection",
    "EvaluationReport",
    "FrameAssignment",
    "GaussianCorner",
    "GroundTruthObject",
    "ImageDims",
    "PairQuality",
    "PixelSet",
    "ProbabilisticBox",
    "ProbabilityMap",
    "SpatialConfig",
    "assign_frame",
    "average_precision",
    "build_probability_map",
    "bvn_rect_prob",
    "evaluate",
    "filter_by_threshold",
    "greedy_assign",
    "hungarian_max",
    "iou",
    "map_score",
    "pair_quality",
    "pixel_probability",
    "validate_dataset",
    "validate_detections",
]
