"""Synthetic scenes, simulated detectors and parameter sweeps.

Every random draw comes from a Philox stream keyed on
``(seed, stream, frame, object)``, so a given object in a given repetition
gets the same noise no matter which other objects or parameters are run.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidGrid
from .model import (
    AxisAlignedBox,
    ConventionalBox,
    Dataset,
    Detection,
    FrameId,
    GaussianCorner,
    GroundTruthObject,
    ImageDims,
    ProbabilisticBox,
)
from .score import evaluate
from .spatial import SpatialConfig

EXPERIMENTS = {
    "variance": "true_variance",
    "label_prob": "gt_label_prob",
    "translation": "geometry_offset",
    "scaling": "geometry_scale",
    "miss_rate": "miss_rate",
    "duplicates": "duplicates_per_object",
    "fp_confidence": "fp_score",
    "bbox_spatial_prob": "spatial_prob",
}

_MISS_STREAM = 2**31 - 1


@dataclass(frozen=True)
class SimConfig:
    """Simulated detector settings.

    ``true_variance`` is the corner noise actually applied; ``reported_variance``
    is what the detector claims. Zero reported variance emits conventional
    boxes. ``n_false`` small boxes of confidence ``fp_score`` are placed along
    the image border of every frame.
    """

    seed: int = 0
    true_variance: float = 0.0
    reported_variance: float = 0.0
    gt_label_prob: float = 1.0
    miss_rate: float = 0.0
    duplicates_per_object: int = 1
    fp_score: float = 0.9
    n_false: int = 0
    false_size: int = 2
    geometry_offset: float = 0.0
    geometry_scale: float = 1.0
    spatial_prob: float | None = None
    exact_miss: bool = False
    stream: int = 0

    def __post_init__(self) -> None:
        for name in ("gt_label_prob", "miss_rate", "fp_score"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.spatial_prob is not None and not 0.0 <= self.spatial_prob <= 1.0:
            raise ValueError("spatial_prob must lie in [0, 1]")
        if self.true_variance < 0 or self.reported_variance < 0:
            raise ValueError("variances must be non-negative")
        if self.duplicates_per_object < 1:
            raise ValueError("duplicates_per_object must be >= 1")
        if self.geometry_scale <= 0:
            raise ValueError("geometry_scale must be positive")
        if self.n_false < 0 or self.false_size < 1:
            raise ValueError("n_false must be >= 0 and false_size >= 1")


@dataclass
class Simulation:
    detections: dict[FrameId, list[Detection]]
    clipped: list[tuple[FrameId, int]] = field(default_factory=list)
    missed: list[tuple[FrameId, int]] = field(default_factory=list)


def _stream(cfg: SimConfig, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, cfg.stream, *key])))


def label_distribution(true_class: int, prob: float, n_classes: int) -> np.ndarray:
    """``prob`` on the true class, the rest spread evenly over the others."""
    if n_classes == 1:
        if prob != 1.0:
            raise ValueError("a single-class dataset needs label probability 1")
        return np.ones(1)
    dist = np.full(n_classes, (1.0 - prob) / (n_classes - 1))
    dist[true_class] = prob
    return dist


def _transform(box: AxisAlignedBox, cfg: SimConfig) -> list[float]:
    x0, y0, x1, y1 = box.as_tuple()
    if cfg.geometry_scale != 1.0:
        f = math.sqrt(cfg.geometry_scale)
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        hw = 0.5 * ((x1 - x0 + 1) * f - 1)
        hh = 0.5 * ((y1 - y0 + 1) * f - 1)
        x0, x1, y0, y1 = cx - hw, cx + hw, cy - hh, cy + hh
    if cfg.geometry_offset:
        dx = cfg.geometry_offset * (box.x1 - box.x0 + 1)
        x0, x1 = x0 + dx, x1 + dx
    return [x0, y0, x1, y1]


def _make_geometry(corners: Sequence[float], cfg: SimConfig):
    box = AxisAlignedBox(*corners)
    if cfg.spatial_prob is not None:
        return ConventionalBox(box, inside_prob=cfg.spatial_prob)
    if cfg.reported_variance == 0.0:
        return ConventionalBox(box)
    return ProbabilisticBox(
        GaussianCorner.isotropic(corners[:2], cfg.reported_variance),
        GaussianCorner.isotropic(corners[2:], cfg.reported_variance),
    )


def border_boxes(dims: ImageDims, n: int, size: int = 2) -> list[AxisAlignedBox]:
    """``n`` small boxes walking clockwise around the image border."""
    step = size + 1
    spots: list[tuple[int, int]] = []
    spots += [(x, 0) for x in range(0, dims.width - size + 1, step)]
    spots += [(dims.width - size, y) for y in range(step, dims.height - size + 1, step)]
    spots += [(x, dims.height - size) for x in range(dims.width - size - step, -1, -step)]
    spots += [(0, y) for y in range(dims.height - size - step, step - 1, -step)]
    if n > len(spots):
        raise ValueError(f"image border fits only {len(spots)} boxes of size {size}")
    return [AxisAlignedBox(x, y, x + size - 1, y + size - 1) for x, y in spots[:n]]


def _missed(dataset: Dataset, cfg: SimConfig) -> set[tuple[FrameId, int]]:
    keys = [(f, i) for f in sorted(dataset.frames) for i in range(len(dataset.gts(f)))]
    if cfg.exact_miss:
        n_miss = int(round(cfg.miss_rate * len(keys)))
        perm = _stream(cfg, _MISS_STREAM).permutation(len(keys))
        return {keys[k] for k in perm[:n_miss]}
    return {k for k in keys if _stream(cfg, k[0], k[1]).random() < cfg.miss_rate}


def simulate_detections(dataset: Dataset, cfg: SimConfig) -> Simulation:
    """Detections from a simulated detector, one (or more) per ground truth."""
    n_classes = dataset.num_classes
    missed = _missed(dataset, cfg)
    sim = Simulation({}, missed=sorted(missed))
    noise_sd = math.sqrt(cfg.true_variance)
    for frame in sorted(dataset.frames):
        dims = dataset.dims(frame)
        dets: list[Detection] = []
        gts = dataset.gts(frame)
        for i, gt in enumerate(gts):
            rng = _stream(cfg, frame, i)
            rng.random()  # miss draw, kept so noise is identical across miss rates
            noise = rng.standard_normal(4)
            if (frame, i) in missed:
                continue
            c = np.array(_transform(gt.box, cfg)) + noise_sd * noise
            x0, x1 = sorted((c[0], c[2]))
            y0, y1 = sorted((c[1], c[3]))
            lo = np.array([x0, y0, x1, y1])
            hi = np.clip(lo, 0.0, [dims.width - 1, dims.height - 1] * 2)
            if not np.array_equal(lo, hi):
                sim.clipped.append((frame, i))
            det = Detection(frame, _make_geometry(hi.tolist(), cfg), label_distribution(gt.class_id, cfg.gt_label_prob, n_classes))
            dets.extend([det] * cfg.duplicates_per_object)
        if cfg.n_false:
            fp_class = gts[0].class_id if gts else 0
            dist = label_distribution(fp_class, cfg.fp_score, n_classes) if n_classes > 1 else np.ones(1)
            for box in border_boxes(dims, cfg.n_false, cfg.false_size):
                dets.append(Detection(frame, ConventionalBox(box), dist))
        sim.detections[frame] = dets
    return sim


def synthetic_square_scene(image_size: int = 2000, object_size: int = 500, n_classes: int = 3) -> Dataset:
    """One frame holding a single square object centred in a square image."""
    start = (image_size - object_size) // 2
    box = AxisAlignedBox(start, start, start + object_size - 1, start + object_size - 1)
    return Dataset(
        images=[(0, ImageDims(image_size, image_size))],
        ground_truths={0: [GroundTruthObject.from_box(0, box, 0)]},
        class_names=[f"class_{k}" for k in range(n_classes)],
    )


def random_rectangles_scene(
    n_objects: int = 500,
    objects_per_frame: int = 5,
    image_size: int = 200,
    min_side: int = 20,
    max_side: int = 60,
    n_classes: int = 3,
    seed: int = 0,
) -> Dataset:
    """Box-annotated rectangles scattered over several frames."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0xBEEF])))
    images, gts = [], {}
    frame = 0
    remaining = n_objects
    while remaining > 0:
        k = min(objects_per_frame, remaining)
        objs = []
        for _ in range(k):
            w, h = rng.integers(min_side, max_side + 1, size=2)
            x0 = int(rng.integers(0, image_size - w + 1))
            y0 = int(rng.integers(0, image_size - h + 1))
            box = AxisAlignedBox(x0, y0, x0 + int(w) - 1, y0 + int(h) - 1)
            objs.append(GroundTruthObject.from_box(frame, box, int(rng.integers(0, n_classes))))
        images.append((frame, ImageDims(image_size, image_size)))
        gts[frame] = objs
        remaining -= k
        frame += 1
    return Dataset(images, gts, [f"class_{k}" for k in range(n_classes)])


@dataclass(frozen=True)
class SweepRow:
    value: float
    repetition: int
    pdq: float
    map: float | None
    ppdq: float
    sp: float
    lbl: float
    fg: float
    bg: float
    tp: int
    fp: int
    fn: int


CSV_FIELDS = ("parameter", "value", "repetition", "pdq", "map", "ppdq", "sp", "lbl", "fg", "bg", "tp", "fp", "fn")


@dataclass
class SweepResult:
    parameter: str
    rows: list[SweepRow]
    repetitions: int

    def values(self) -> list[float]:
        seen: list[float] = []
        for r in self.rows:
            if r.value not in seen:
                seen.append(r.value)
        return seen

    def mean(self, metric: str = "pdq") -> dict[float, float]:
        out = {}
        for v in self.values():
            xs = [getattr(r, metric) for r in self.rows if r.value == v]
            out[v] = math.fsum(xs) / len(xs)
        return out

    def std(self, metric: str = "pdq") -> dict[float, float]:
        return {v: float(np.std([getattr(r, metric) for r in self.rows if r.value == v])) for v in self.values()}

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in self.rows:
            writer.writerow(
                [self.parameter, repr(r.value), r.repetition, repr(r.pdq), "" if r.map is None else repr(r.map),
                 repr(r.ppdq), repr(r.sp), repr(r.lbl), repr(r.fg), repr(r.bg), r.tp, r.fp, r.fn]
            )
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def plot(self, path: str | Path) -> None:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        xs = self.values()
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(xs, [self.mean("pdq")[x] for x in xs], marker="o", label="PDQ")
        if all(r.map is not None for r in self.rows):
            ax.plot(xs, [self.mean("map")[x] for x in xs], marker="s", label="mAP")
        ax.set_xlabel(self.parameter)
        ax.set_ylabel("score")
        ax.set_ylim(0, 1.05)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def _check_grid(experiment: str, grid: Sequence[float]) -> None:
    if experiment not in EXPERIMENTS:
        raise InvalidGrid(f"unknown experiment {experiment!r}; choose from {sorted(EXPERIMENTS)}")
    if len(grid) == 0:
        raise InvalidGrid("grid is empty")
    for v in grid:
        if not math.isfinite(v):
            raise InvalidGrid(f"non-finite grid value {v}")
        if experiment in ("label_prob", "miss_rate", "fp_confidence", "bbox_spatial_prob") and not 0 <= v <= 1:
            raise InvalidGrid(f"{experiment} values must lie in [0, 1], got {v}")
        if experiment == "variance" and v < 0:
            raise InvalidGrid("variances must be non-negative")
        if experiment == "scaling" and v <= 0:
            raise InvalidGrid("scale ratios must be positive")
        if experiment == "duplicates" and (v < 1 or v != int(v)):
            raise InvalidGrid("duplicate counts must be integers >= 1")


def default_scene(experiment: str) -> Dataset:
    if experiment in ("translation", "scaling", "bbox_spatial_prob", "fp_confidence"):
        return synthetic_square_scene(200, 50)
    return random_rectangles_scene(n_objects=100)


def run_sweep(
    experiment: str,
    grid: Sequence[float],
    repetitions: int = 20,
    seed: int = 0,
    base: SimConfig | None = None,
    dataset: Dataset | None = None,
    spatial: SpatialConfig | None = None,
    with_map: bool = True,
    workers: int = 1,
) -> SweepResult:
    """Simulate and score every ``(grid value, repetition)`` combination."""
    _check_grid(experiment, grid)
    if repetitions < 1:
        raise InvalidGrid("repetitions must be >= 1")
    base = base or SimConfig()
    if experiment == "fp_confidence" and base.n_false == 0:
        base = replace(base, n_false=5)
    dataset = dataset or default_scene(experiment)
    param = EXPERIMENTS[experiment]
    tasks = [(v, rep) for v in grid for rep in range(repetitions)]

    def run(task: tuple[float, int]) -> SweepRow:
        value, rep = task
        setting = int(value) if experiment == "duplicates" else float(value)
        cfg = replace(base, seed=seed, stream=rep, **{param: setting})
        dets = simulate_detections(dataset, cfg).detections
        rep_ = evaluate(dataset, dets, spatial, compute_map=with_map)
        return SweepRow(
            value=float(value), repetition=rep, pdq=rep_.pdq, map=rep_.map, ppdq=rep_.avg_ppdq,
            sp=rep_.avg_spatial, lbl=rep_.avg_label, fg=rep_.avg_fg_quality, bg=rep_.avg_bg_quality,
            tp=rep_.tp_total, fp=rep_.fp_total, fn=rep_.fn_total,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, tasks))
    else:
        rows = [run(t) for t in tasks]
    return SweepResult(experiment, rows, repetitions)
