"""Per-pixel spatial probabilities for conventional and probabilistic boxes.

A probabilistic box places independent 2-D Gaussians on its top-left and
bottom-right corners. Pixel ``(u, v)`` belongs to the box when the top-left
corner lies above-left of it and the bottom-right corner lies below-right of
it, so its probability is the product of two rectangle masses:

* top-left corner mass over ``[-0.5, u + 0.5] x [-0.5, v + 0.5]``
* bottom-right corner mass over ``[u - 0.5, W - 0.5] x [v - 0.5, H - 0.5]``

The half-pixel offsets treat a corner as lying on the pixel it rounds to, so
a zero-variance box covers exactly the inclusive pixel range of its means,
the same pixels a conventional box with those corners covers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bvn import normal_interval, rect_prob
from .errors import NonPSDCovariance
from .model import AxisAlignedBox, ConventionalBox, Detection, GaussianCorner, ImageDims, ProbabilisticBox

# region bound uses marginals; slack guards against rounding at the threshold
_BOUND_SLACK = 1.0 - 1e-9


@dataclass(frozen=True)
class SpatialConfig:
    epsilon: float = 1e-14
    p_min: float = 1e-4
    bvn_tolerance: float = 1e-7

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < self.p_min < 1.0:
            raise ValueError(f"need 0 < epsilon < p_min < 1, got epsilon={self.epsilon}, p_min={self.p_min}")
        if self.bvn_tolerance <= 0:
            raise ValueError("bvn_tolerance must be positive")

    @property
    def max_log_loss(self) -> float:
        return -math.log(self.epsilon)


class ProbabilityMap:
    """Spatial probabilities of one detection over a rectangular image region.

    ``values`` holds clamped probabilities on the support and 0 elsewhere.
    Pixels outside the region are off-support with probability ``epsilon``
    or less. ``origin`` is the ``(x, y)`` of ``values[0, 0]``.
    """

    __slots__ = ("dims", "origin", "values", "support", "epsilon", "neg_log_p", "neg_log_q", "bg_total", "support_count")

    def __init__(self, dims: ImageDims, origin: tuple[int, int], values: np.ndarray, support: np.ndarray, epsilon: float):
        self.dims = dims
        self.origin = origin
        self.values = values
        self.support = support
        self.epsilon = epsilon
        with np.errstate(divide="ignore"):
            self.neg_log_p = np.where(support, -np.log(np.where(support, values, 1.0)), 0.0)
            self.neg_log_q = np.where(support, -np.log1p(-np.where(support, values, 0.0)), 0.0)
        self.bg_total = float(self.neg_log_q.sum())
        self.support_count = int(support.sum())
        for arr in (values, support, self.neg_log_p, self.neg_log_q):
            arr.setflags(write=False)

    @classmethod
    def empty(cls, dims: ImageDims, epsilon: float) -> ProbabilityMap:
        z = np.zeros((0, 0))
        return cls(dims, (0, 0), z, z.astype(bool), epsilon)

    @property
    def is_empty(self) -> bool:
        return self.support_count == 0

    @property
    def region(self) -> tuple[int, int, int, int] | None:
        """Inclusive ``(x0, y0, x1, y1)`` of the stored region."""
        h, w = self.values.shape
        if h == 0 or w == 0:
            return None
        return (self.origin[0], self.origin[1], self.origin[0] + w - 1, self.origin[1] + h - 1)

    def support_coords(self) -> np.ndarray:
        ys, xs = np.nonzero(self.support)
        return np.stack([xs + self.origin[0], ys + self.origin[1]], axis=1)

    def dense(self) -> np.ndarray:
        """Image-sized array: clamped values on support, 0 elsewhere."""
        out = np.zeros((self.dims.height, self.dims.width))
        if self.region is not None:
            h, w = self.values.shape
            x, y = self.origin
            out[y : y + h, x : x + w] = self.values
        return out

    def dense_support(self) -> np.ndarray:
        out = np.zeros((self.dims.height, self.dims.width), dtype=bool)
        if self.region is not None:
            h, w = self.support.shape
            x, y = self.origin
            out[y : y + h, x : x + w] = self.support
        return out

    def value_at(self, x: int, y: int) -> float:
        """Stored probability at a pixel (``epsilon`` off-support)."""
        region = self.region
        if region is not None and region[0] <= x <= region[2] and region[1] <= y <= region[3]:
            r, c = y - self.origin[1], x - self.origin[0]
            if self.support[r, c]:
                return float(self.values[r, c])
        return self.epsilon


def _check_corner(corner: GaussianCorner) -> None:
    if not corner.is_psd:
        eig = np.linalg.eigvalsh(0.5 * (corner.covariance + corner.covariance.T))
        raise NonPSDCovariance(f"covariance has eigenvalue {eig.min():.3g} < 0")


def bvn_rect_prob(corner: GaussianCorner, rect: AxisAlignedBox) -> float:
    """Probability mass of ``corner`` over the continuous rectangle ``rect``.

    ``rect`` is read as ``[x0, x1] x [y0, y1]``; infinite limits are allowed.
    """
    _check_corner(corner)
    p = rect_prob(corner.mean, corner.covariance, rect.x0, rect.x1, rect.y0, rect.y1)
    return float(p)


def _corner_grid(corner: GaussianCorner, x_lo, x_hi, y_lo, y_hi) -> np.ndarray:
    """Rectangle masses on the grid ``rows(y) x cols(x)`` from 1-D limits."""
    cov = corner.covariance
    if cov[0, 1] == 0.0 and cov[1, 0] == 0.0:
        mx = normal_interval(corner.mean[0], float(cov[0, 0]), x_lo, x_hi)
        my = normal_interval(corner.mean[1], float(cov[1, 1]), y_lo, y_hi)
        return np.outer(my, mx)
    X_lo, Y_lo = np.meshgrid(x_lo, y_lo)
    X_hi, Y_hi = np.meshgrid(x_hi, y_hi)
    return rect_prob(corner.mean, cov, X_lo, X_hi, Y_lo, Y_hi)


def _pbox_grid(pbox: ProbabilisticBox, dims: ImageDims, cols: np.ndarray, rows: np.ndarray) -> np.ndarray:
    cols = np.asarray(cols, dtype=float)
    rows = np.asarray(rows, dtype=float)
    w_edge, h_edge = dims.width - 0.5, dims.height - 0.5
    r0 = _corner_grid(
        pbox.top_left,
        np.full_like(cols, -0.5), cols + 0.5,
        np.full_like(rows, -0.5), rows + 0.5,
    )
    r1 = _corner_grid(
        pbox.bottom_right,
        cols - 0.5, np.full_like(cols, w_edge),
        rows - 0.5, np.full_like(rows, h_edge),
    )
    return r0 * r1


def _conventional_value(box: ConventionalBox, cfg: SpatialConfig) -> float:
    return 1.0 - cfg.epsilon if box.inside_prob is None else float(box.inside_prob)


def probability_grid(det: Detection, dims: ImageDims, cols: np.ndarray, rows: np.ndarray, cfg: SpatialConfig | None = None) -> np.ndarray:
    """Unclamped spatial probabilities on ``rows x cols`` (pixel indices)."""
    cfg = cfg or SpatialConfig()
    geom = det.geometry
    cols = np.asarray(cols)
    rows = np.asarray(rows)
    if isinstance(geom, ConventionalBox):
        c0, r0, c1, r1 = geom.box.pixel_span()
        inside = np.outer((rows >= r0) & (rows <= r1), (cols >= c0) & (cols <= c1))
        return np.where(inside, _conventional_value(geom, cfg), cfg.epsilon)
    _check_corner(geom.top_left)
    _check_corner(geom.bottom_right)
    return _pbox_grid(geom, dims, cols, rows)


def pixel_probability(det: Detection, pixel: tuple[int, int], dims: ImageDims, cfg: SpatialConfig | None = None) -> float:
    """Spatial probability that pixel ``(u, v)`` belongs to ``det`` (unclamped)."""
    u, v = pixel
    if not (0 <= u < dims.width and 0 <= v < dims.height):
        raise ValueError(f"pixel {pixel} outside {dims.width}x{dims.height} image")
    return float(probability_grid(det, dims, np.array([u]), np.array([v]), cfg)[0, 0])


def _make_map(dims: ImageDims, origin: tuple[int, int], raw: np.ndarray, cfg: SpatialConfig) -> ProbabilityMap:
    support = raw >= cfg.p_min
    values = np.where(support, np.clip(raw, cfg.epsilon, 1.0 - cfg.epsilon), 0.0)
    return ProbabilityMap(dims, origin, values, support, cfg.epsilon)


def _marginal_bound(corner0: GaussianCorner, corner1: GaussianCorner, axis: int, n: int) -> np.ndarray:
    """Upper bound on pixel probability along one axis, from corner marginals."""
    idx = np.arange(n, dtype=float)
    m0 = normal_interval(corner0.mean[axis], float(corner0.covariance[axis, axis]), np.full(n, -0.5), idx + 0.5)
    m1 = normal_interval(corner1.mean[axis], float(corner1.covariance[axis, axis]), idx - 0.5, np.full(n, n - 0.5))
    return m0 * m1


def build_probability_map(det: Detection, dims: ImageDims, cfg: SpatialConfig | None = None) -> ProbabilityMap:
    """Evaluate the detection's spatial probabilities over its bounded region.

    The region is the box itself for conventional boxes. For probabilistic
    boxes it is every row and column whose marginal bound reaches ``p_min``;
    no pixel outside it can reach ``p_min``.
    """
    cfg = cfg or SpatialConfig()
    geom = det.geometry
    if isinstance(geom, ConventionalBox):
        c0, r0, c1, r1 = geom.box.pixel_span(dims)
        if c0 > c1 or r0 > r1:
            return ProbabilityMap.empty(dims, cfg.epsilon)
        raw = np.full((r1 - r0 + 1, c1 - c0 + 1), _conventional_value(geom, cfg))
        if raw[0, 0] < cfg.p_min:
            return ProbabilityMap.empty(dims, cfg.epsilon)
        return _make_map(dims, (c0, r0), raw, cfg)

    _check_corner(geom.top_left)
    _check_corner(geom.bottom_right)
    col_bound = _marginal_bound(geom.top_left, geom.bottom_right, 0, dims.width)
    row_bound = _marginal_bound(geom.top_left, geom.bottom_right, 1, dims.height)
    cols = np.nonzero(col_bound >= cfg.p_min * _BOUND_SLACK)[0]
    rows = np.nonzero(row_bound >= cfg.p_min * _BOUND_SLACK)[0]
    if cols.size == 0 or rows.size == 0:
        return ProbabilityMap.empty(dims, cfg.epsilon)
    c0, c1, r0, r1 = int(cols[0]), int(cols[-1]), int(rows[0]), int(rows[-1])
    raw = _pbox_grid(geom, dims, np.arange(c0, c1 + 1), np.arange(r0, r1 + 1))
    pmap = _make_map(dims, (c0, r0), raw, cfg)
    if pmap.is_empty:
        return ProbabilityMap.empty(dims, cfg.epsilon)
    return pmap
