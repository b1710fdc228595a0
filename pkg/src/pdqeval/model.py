"""Domain types shared across the package.

Coordinates follow image convention: origin at the top-left pixel, x to the
right, y downward. A box ``[x0, y0, x1, y1]`` covers pixels ``x0..x1`` and
``y0..y1`` inclusive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

FrameId = int

LABEL_SUM_TOL = 1e-6
PSD_TOL = 1e-9
SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class ImageDims:
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be positive, got {self.width}x{self.height}")


@dataclass(frozen=True)
class AxisAlignedBox:
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def is_ordered(self) -> bool:
        return self.x0 <= self.x1 and self.y0 <= self.y1

    @property
    def is_integer(self) -> bool:
        return all(float(v).is_integer() for v in self.as_tuple())

    @property
    def width(self) -> float:
        """Inclusive pixel width."""
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> float:
        return self.y1 - self.y0 + 1

    @property
    def area(self) -> float:
        return max(self.width, 0.0) * max(self.height, 0.0)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x0, self.y0, self.x1, self.y1)

    def within(self, dims: ImageDims) -> bool:
        return self.x0 >= 0 and self.y0 >= 0 and self.x1 <= dims.width - 1 and self.y1 <= dims.height - 1

    def pixel_span(self, dims: ImageDims | None = None) -> tuple[int, int, int, int]:
        """Integer pixel ranges ``(c0, r0, c1, r1)`` (inclusive) covered by the box.

        A pixel ``u`` is covered when ``x0 <= u + 0.5`` and ``x1 >= u - 0.5``,
        i.e. the box corners rounded to the nearest pixel enclose it. The span
        may be empty (``c0 > c1``) after clipping.
        """
        c0 = int(np.ceil(self.x0 - 0.5))
        r0 = int(np.ceil(self.y0 - 0.5))
        c1 = int(np.floor(self.x1 + 0.5))
        r1 = int(np.floor(self.y1 + 0.5))
        if dims is not None:
            c0, r0 = max(c0, 0), max(r0, 0)
            c1, r1 = min(c1, dims.width - 1), min(r1, dims.height - 1)
        return c0, r0, c1, r1


class PixelSet:
    """A set of pixels stored as a boolean mask anchored at ``origin``.

    ``mask[r, c]`` marks pixel ``(origin_x + c, origin_y + r)``.
    """

    __slots__ = ("origin", "mask", "_count", "_full")

    def __init__(self, origin: tuple[int, int], mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 2:
            raise ValueError("pixel mask must be 2-D")
        mask.setflags(write=False)
        self.origin = (int(origin[0]), int(origin[1]))
        self.mask = mask
        self._count = int(mask.sum())
        self._full = self._count == mask.size

    @classmethod
    def from_box(cls, box: AxisAlignedBox) -> PixelSet:
        c0, r0, c1, r1 = box.pixel_span()
        w, h = max(c1 - c0 + 1, 0), max(r1 - r0 + 1, 0)
        return cls((c0, r0), np.ones((h, w), dtype=bool))

    @classmethod
    def from_mask(cls, full_mask: np.ndarray) -> PixelSet:
        """Build from an image-sized boolean mask (rows = y)."""
        full_mask = np.asarray(full_mask, dtype=bool)
        ys, xs = np.nonzero(full_mask)
        if len(xs) == 0:
            return cls((0, 0), np.zeros((0, 0), dtype=bool))
        x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
        return cls((x0, y0), full_mask[y0 : y1 + 1, x0 : x1 + 1].copy())

    @classmethod
    def from_coords(cls, coords: Iterable[tuple[int, int]]) -> PixelSet:
        pts = np.asarray(list(coords), dtype=int).reshape(-1, 2)
        if len(pts) == 0:
            return cls((0, 0), np.zeros((0, 0), dtype=bool))
        x0, y0 = pts.min(axis=0)
        x1, y1 = pts.max(axis=0)
        mask = np.zeros((y1 - y0 + 1, x1 - x0 + 1), dtype=bool)
        mask[pts[:, 1] - y0, pts[:, 0] - x0] = True
        return cls((x0, y0), mask)

    def __len__(self) -> int:
        return self._count

    @property
    def is_full(self) -> bool:
        """True when every pixel of the anchoring rectangle is in the set."""
        return self._full

    @property
    def bounds(self) -> tuple[int, int, int, int] | None:
        """Tight inclusive bounds ``(x0, y0, x1, y1)``, or None if empty."""
        if self._count == 0:
            return None
        if self._full:
            h, w = self.mask.shape
            return (self.origin[0], self.origin[1], self.origin[0] + w - 1, self.origin[1] + h - 1)
        ys, xs = np.nonzero(self.mask)
        return (
            self.origin[0] + int(xs.min()),
            self.origin[1] + int(ys.min()),
            self.origin[0] + int(xs.max()),
            self.origin[1] + int(ys.max()),
        )

    def coords(self) -> np.ndarray:
        """``(N, 2)`` array of ``(x, y)`` pixel coordinates in row-major order."""
        ys, xs = np.nonzero(self.mask)
        return np.stack([xs + self.origin[0], ys + self.origin[1]], axis=1)

    def to_mask(self, dims: ImageDims) -> np.ndarray:
        """Image-sized boolean mask. Pixels outside the image are dropped."""
        out = np.zeros((dims.height, dims.width), dtype=bool)
        pts = self.coords()
        keep = (pts[:, 0] >= 0) & (pts[:, 0] < dims.width) & (pts[:, 1] >= 0) & (pts[:, 1] < dims.height)
        pts = pts[keep]
        out[pts[:, 1], pts[:, 0]] = True
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PixelSet):
            return NotImplemented
        if self._count != other._count or self.bounds != other.bounds:
            return False
        if self._count == 0:
            return True
        x0, y0, x1, y1 = self.bounds  # type: ignore[misc]
        return bool(np.array_equal(self._crop(x0, y0, x1, y1), other._crop(x0, y0, x1, y1)))

    def __hash__(self) -> int:
        return hash((self._count, self.bounds))

    def _crop(self, x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
        ox, oy = self.origin
        return self.mask[y0 - oy : y1 - oy + 1, x0 - ox : x1 - ox + 1]

    def __repr__(self) -> str:
        return f"PixelSet(n={self._count}, bounds={self.bounds})"


@dataclass(frozen=True, eq=False)
class GroundTruthObject:
    frame: FrameId
    segment: PixelSet
    box: AxisAlignedBox
    class_id: int

    @classmethod
    def from_box(cls, frame: FrameId, box: AxisAlignedBox | Sequence[float], class_id: int) -> GroundTruthObject:
        """Box-only annotation: every pixel inside the box is foreground."""
        if not isinstance(box, AxisAlignedBox):
            box = AxisAlignedBox(*box)
        return cls(frame, PixelSet.from_box(box), box, class_id)

    @classmethod
    def from_mask(cls, frame: FrameId, mask: np.ndarray, class_id: int) -> GroundTruthObject:
        """Mask annotation; the box is the tight bounding box of the mask."""
        segment = PixelSet.from_mask(mask)
        bounds = segment.bounds
        if bounds is None:
            raise ValueError("ground-truth mask is empty")
        return cls(frame, segment, AxisAlignedBox(*bounds), class_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroundTruthObject):
            return NotImplemented
        return (
            self.frame == other.frame
            and self.class_id == other.class_id
            and self.box == other.box
            and self.segment == other.segment
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class GaussianCorner:
    mean: tuple[float, float]
    covariance: np.ndarray

    def __post_init__(self) -> None:
        cov = np.array(self.covariance, dtype=float).reshape(2, 2)
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "mean", (float(self.mean[0]), float(self.mean[1])))

    @classmethod
    def isotropic(cls, mean: Sequence[float], variance: float) -> GaussianCorner:
        return cls((mean[0], mean[1]), np.diag([variance, variance]))

    @property
    def is_symmetric(self) -> bool:
        return abs(self.covariance[0, 1] - self.covariance[1, 0]) <= SYMMETRY_TOL

    @property
    def is_psd(self) -> bool:
        sym = 0.5 * (self.covariance + self.covariance.T)
        return bool(np.linalg.eigvalsh(sym).min() >= -PSD_TOL)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GaussianCorner):
            return NotImplemented
        return self.mean == other.mean and bool(np.array_equal(self.covariance, other.covariance))

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class ConventionalBox:
    """Deterministic box.

    ``inside_prob`` overrides the spatial probability given to covered pixels;
    None means ``1 - epsilon`` from the spatial configuration.
    """

    box: AxisAlignedBox
    inside_prob: float | None = None


@dataclass(frozen=True)
class ProbabilisticBox:
    top_left: GaussianCorner
    bottom_right: GaussianCorner

    @property
    def mean_box(self) -> AxisAlignedBox:
        return AxisAlignedBox(*self.top_left.mean, *self.bottom_right.mean)


Geometry = Union[ConventionalBox, ProbabilisticBox]


@dataclass(frozen=True, eq=False)
class Detection:
    frame: FrameId
    geometry: Geometry
    label_dist: np.ndarray

    def __post_init__(self) -> None:
        dist = np.array(self.label_dist, dtype=float).reshape(-1)
        dist.setflags(write=False)
        object.__setattr__(self, "label_dist", dist)

    @property
    def label(self) -> int:
        """Winning class; ties resolve to the lowest index."""
        return int(np.argmax(self.label_dist))

    @property
    def score(self) -> float:
        return float(self.label_dist.max()) if self.label_dist.size else 0.0

    @property
    def box(self) -> AxisAlignedBox:
        """Point-estimate box (mean corners for probabilistic boxes)."""
        if isinstance(self.geometry, ProbabilisticBox):
            return self.geometry.mean_box
        return self.geometry.box

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Detection):
            return NotImplemented
        return (
            self.frame == other.frame
            and self.geometry == other.geometry
            and bool(np.array_equal(self.label_dist, other.label_dist))
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass
class Dataset:
    images: list[tuple[FrameId, ImageDims]]
    ground_truths: dict[FrameId, list[GroundTruthObject]]
    class_names: list[str]
    _dims: dict[FrameId, ImageDims] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self._dims = dict(self.images)

    def dims(self, frame: FrameId) -> ImageDims:
        return self._dims[frame]

    def has_frame(self, frame: FrameId) -> bool:
        return frame in self._dims

    @property
    def frames(self) -> list[FrameId]:
        return [f for f, _ in self.images]

    def gts(self, frame: FrameId) -> list[GroundTruthObject]:
        return self.ground_truths.get(frame, [])

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def num_objects(self) -> int:
        return sum(len(v) for v in self.ground_truths.values())


@dataclass(frozen=True)
class Violation:
    kind: str
    frame: FrameId | None = None
    index: int | None = None
    detail: str = ""

    def __str__(self) -> str:
        loc = []
        if self.frame is not None:
            loc.append(f"frame={self.frame}")
        if self.index is not None:
            loc.append(f"index={self.index}")
        where = f"[{', '.join(loc)}] " if loc else ""
        return f"{self.kind} {where}{self.detail}".rstrip()


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """Return every invariant violation in ``dataset``; empty means valid."""
    out: list[Violation] = []
    seen: set[FrameId] = set()
    for frame, _dims in dataset.images:
        if frame < 0:
            out.append(Violation("NegativeFrameId", frame))
        if frame in seen:
            out.append(Violation("DuplicateFrame", frame))
        seen.add(frame)
    for frame in sorted(dataset.ground_truths):
        if frame not in seen:
            out.append(Violation("UnknownFrame", frame))
            continue
        dims = dataset.dims(frame)
        for i, gt in enumerate(dataset.ground_truths[frame]):
            out.extend(_gt_violations(gt, frame, i, dims, dataset.num_classes))
    return out


def _gt_violations(gt: GroundTruthObject, frame: FrameId, i: int, dims: ImageDims, n_classes: int) -> list[Violation]:
    out = []
    if gt.frame != frame:
        out.append(Violation("FrameMismatch", frame, i, f"object claims frame {gt.frame}"))
    if not 0 <= gt.class_id < n_classes:
        out.append(Violation("ClassIndexOutOfRange", frame, i, f"class_id={gt.class_id}"))
    box = gt.box
    if not box.is_ordered:
        out.append(Violation("BoxNotOrdered", frame, i, str(box.as_tuple())))
    if not box.is_integer:
        out.append(Violation("BoxNotInteger", frame, i, str(box.as_tuple())))
    if not box.within(dims):
        out.append(Violation("BoxOutOfBounds", frame, i, str(box.as_tuple())))
    bounds = gt.segment.bounds
    if bounds is None:
        out.append(Violation("EmptySegment", frame, i))
    elif not (box.x0 <= bounds[0] and box.y0 <= bounds[1] and bounds[2] <= box.x1 and bounds[3] <= box.y1):
        out.append(Violation("SegmentOutsideBox", frame, i))
    return out


def validate_detections(
    detections: Mapping[FrameId, Sequence[Detection]], dataset: Dataset
) -> list[Violation]:
    """Return every invariant violation among ``detections``."""
    out: list[Violation] = []
    for frame in sorted(detections):
        for j, det in enumerate(detections[frame]):
            if not dataset.has_frame(frame) or det.frame != frame:
                out.append(Violation("UnknownFrame", frame, j))
            out.extend(detection_violations(det, dataset.num_classes, frame, j))
    return out


def detection_violations(det: Detection, n_classes: int, frame: FrameId | None = None, j: int | None = None) -> list[Violation]:
    out = []
    dist = det.label_dist
    if dist.size != n_classes:
        out.append(Violation("LabelDistLength", frame, j, f"{dist.size} != {n_classes}"))
    if dist.size and (np.any(dist < 0) or np.any(dist > 1) or not np.all(np.isfinite(dist))):
        out.append(Violation("LabelProbOutOfRange", frame, j))
    total = float(dist.sum())
    if abs(total - 1.0) > LABEL_SUM_TOL:
        out.append(Violation("LabelDistNotNormalized", frame, j, f"sum={total:.9g}"))
    geom = det.geometry
    if isinstance(geom, ConventionalBox):
        if not geom.box.is_ordered:
            out.append(Violation("BoxNotOrdered", frame, j, str(geom.box.as_tuple())))
        if geom.inside_prob is not None and not 0.0 <= geom.inside_prob <= 1.0:
            out.append(Violation("LabelProbOutOfRange", frame, j, "inside_prob"))
    else:
        tl, br = geom.top_left, geom.bottom_right
        if tl.mean[0] > br.mean[0] or tl.mean[1] > br.mean[1]:
            out.append(Violation("CornersNotOrdered", frame, j))
        for name, corner in (("top_left", tl), ("bottom_right", br)):
            if not corner.is_symmetric:
                out.append(Violation("CovarianceNotSymmetric", frame, j, name))
            if not corner.is_psd:
                out.append(Violation("NonPSDCovariance", frame, j, name))
    return out
