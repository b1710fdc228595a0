"""Heatmap and TP/FP/FN overlay images."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image, ImageDraw

from .assign import FrameAssignment
from .errors import IoError
from .model import Detection, GaussianCorner, GroundTruthObject, ImageDims, ProbabilisticBox
from .spatial import ProbabilityMap

BLUE = (31, 119, 180)
ORANGE = (255, 127, 14)
MASK_ALPHA = 0.5
SIGMA_LEVELS = (1, 2, 3)


def heatmap_array(pmap: ProbabilityMap) -> np.ndarray:
    """8-bit image of the map: ``round(255 * p)``, 0 off the support."""
    return np.rint(255.0 * pmap.dense()).astype(np.uint8)


def _save(img: Image.Image, path: str | Path) -> None:
    try:
        img.save(path)
    except (OSError, ValueError) as exc:
        raise IoError(f"cannot write image {path}: {exc}") from exc


def render_heatmap(pmap: ProbabilityMap, path: str | Path) -> np.ndarray:
    img = heatmap_array(pmap)
    _save(Image.fromarray(img, mode="L"), path)
    return img


@dataclass
class OverlaySummary:
    blue_boxes: list[int] = field(default_factory=list)
    orange_boxes: list[int] = field(default_factory=list)
    blue_masks: list[int] = field(default_factory=list)
    orange_masks: list[int] = field(default_factory=list)
    ellipses: list[tuple[int, str, int, tuple[float, float]]] = field(default_factory=list)
    captions: list[str] = field(default_factory=list)


def corner_ellipse(corner: GaussianCorner, n_sigma: float, n_points: int = 64) -> tuple[np.ndarray, tuple[float, float]]:
    """Contour polygon at ``n_sigma`` standard deviations, and its semi-axes."""
    vals, vecs = np.linalg.eigh(0.5 * (corner.covariance + corner.covariance.T))
    radii = n_sigma * np.sqrt(np.clip(vals, 0.0, None))
    t = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
    circle = np.stack([radii[0] * np.cos(t), radii[1] * np.sin(t)])
    pts = (vecs @ circle).T + np.asarray(corner.mean)
    return pts, (float(radii[0]), float(radii[1]))


def _blend(canvas: np.ndarray, mask: np.ndarray, color: tuple[int, int, int]) -> None:
    canvas[mask] = (canvas[mask] * (1 - MASK_ALPHA) + np.asarray(color) * MASK_ALPHA).astype(np.uint8)


def _box_xy(det: Detection) -> list[float]:
    b = det.box
    return [b.x0, b.y0, b.x1, b.y1]


def render_overlay(
    dims: ImageDims,
    gts: Sequence[GroundTruthObject],
    dets: Sequence[Detection],
    assignment: FrameAssignment,
    path: str | Path | None = None,
    background: np.ndarray | None = None,
) -> tuple[np.ndarray, OverlaySummary]:
    """Draw TPs in blue (mask and box), FPs as orange boxes, FNs as orange masks.

    TP boxes carry a ``pPDQ/Sp/Lbl`` caption. Probabilistic boxes get contour
    ellipses for both corners at 1, 2 and 3 standard deviations.
    """
    if background is None:
        canvas = np.zeros((dims.height, dims.width, 3), dtype=np.uint8)
    else:
        canvas = np.array(background, dtype=np.uint8).reshape(dims.height, dims.width, -1)[..., :3].copy()
    summary = OverlaySummary()
    for pair in assignment.pairs:
        _blend(canvas, gts[pair.gt_index].segment.to_mask(dims), BLUE)
        summary.blue_masks.append(pair.gt_index)
    for i in assignment.fn_gt:
        _blend(canvas, gts[i].segment.to_mask(dims), ORANGE)
        summary.orange_masks.append(i)

    img = Image.fromarray(canvas, mode="RGB")
    draw = ImageDraw.Draw(img)
    drawn: list[tuple[int, tuple[int, int, int]]] = [(p.det_index, BLUE) for p in assignment.pairs]
    drawn += [(j, ORANGE) for j in assignment.fp_det]
    for j, color in drawn:
        det = dets[j]
        draw.rectangle(_box_xy(det), outline=color)
        (summary.blue_boxes if color == BLUE else summary.orange_boxes).append(j)
        if isinstance(det.geometry, ProbabilisticBox):
            for name, corner in (("top_left", det.geometry.top_left), ("bottom_right", det.geometry.bottom_right)):
                for k in SIGMA_LEVELS:
                    pts, radii = corner_ellipse(corner, k)
                    draw.polygon([tuple(p) for p in pts], outline=color)
                    summary.ellipses.append((j, name, k, radii))
    for pair in assignment.pairs:
        q = pair.quality
        text = f"pPDQ {q.ppdq:.3f} Sp {q.spatial:.3f} Lbl {q.label:.3f}"
        b = dets[pair.det_index].box
        draw.text((b.x0, max(b.y0 - 11, 0)), text, fill=BLUE)
        summary.captions.append(text)

    out = np.asarray(img)
    if path is not None:
        _save(img, path)
    return out, summary
