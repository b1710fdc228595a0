"""JSON file formats for ground truth and detections, plus mask RLE.

Masks are run-length encoded over the ``height x width`` raster in
column-major order, alternating runs of 0 and 1 and starting with 0 (the
first run may be empty).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import MalformedJson, NonPSDCovariance, RleLengthMismatch, SchemaViolation, UnknownImageId
from .model import (
    LABEL_SUM_TOL,
    SYMMETRY_TOL,
    AxisAlignedBox,
    ConventionalBox,
    Dataset,
    Detection,
    FrameId,
    GaussianCorner,
    GroundTruthObject,
    ImageDims,
    PixelSet,
    ProbabilisticBox,
    validate_dataset,
)

SCHEMA_VERSION = 1


def rle_encode(mask: np.ndarray) -> list[int]:
    flat = np.asarray(mask, dtype=bool).flatten(order="F")
    if flat.size == 0:
        return []
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return [int(r) for r in runs]


def rle_decode(counts: Sequence[int], width: int, height: int, *, path: str | None = None, field: str | None = None) -> np.ndarray:
    counts = list(counts)
    if any((not isinstance(c, int)) or isinstance(c, bool) or c < 0 for c in counts):
        raise SchemaViolation("RLE counts must be non-negative integers", path=path, field=field)
    total = sum(counts)
    if total != width * height:
        raise RleLengthMismatch(f"RLE covers {total} pixels, image has {width * height}", path=path, field=field)
    values = np.zeros(len(counts), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, counts)
    return flat.reshape((height, width), order="F")


def _load(path: str | Path) -> Any:
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MalformedJson(f"cannot read file: {exc}", path=path) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"{exc.msg} (line {exc.lineno}, column {exc.colno})", path=path) from exc


def _require(obj: Any, key: str, kind: type | tuple[type, ...], path: str, where: str) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaViolation(f"missing field {key!r}", path=path, field=where)
    value = obj[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise SchemaViolation(f"field {key!r} has wrong type {type(value).__name__}", path=path, field=f"{where}.{key}")
    return value


def _numbers(value: Any, n: int, path: str, where: str) -> list[float]:
    if not isinstance(value, list) or len(value) != n or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v) for v in value
    ):
        raise SchemaViolation(f"expected a list of {n} finite numbers", path=path, field=where)
    return [float(v) if isinstance(v, float) else v for v in value]


def _check_version(doc: Any, path: str) -> None:
    if not isinstance(doc, dict):
        raise SchemaViolation("top level must be an object", path=path)
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaViolation(f"unsupported schema_version {version!r}", path=path, field="schema_version")


def ground_truth_from_dict(doc: Any, path: str = "<memory>", validate: bool = True) -> Dataset:
    _check_version(doc, path)
    images_raw = _require(doc, "images", list, path, "$")
    cats_raw = _require(doc, "categories", list, path, "$")
    anns_raw = _require(doc, "annotations", list, path, "$")

    images: list[tuple[FrameId, ImageDims]] = []
    for i, img in enumerate(images_raw):
        where = f"images[{i}]"
        fid = _require(img, "id", int, path, where)
        w = _require(img, "width", int, path, where)
        h = _require(img, "height", int, path, where)
        if fid < 0 or w < 1 or h < 1:
            raise SchemaViolation("image id must be >= 0 and dimensions positive", path=path, field=where)
        images.append((fid, ImageDims(w, h)))
    dims = dict(images)
    if len(dims) != len(images):
        raise SchemaViolation("duplicate image id", path=path, field="images")

    names: dict[int, str] = {}
    for i, cat in enumerate(cats_raw):
        cid = _require(cat, "id", int, path, f"categories[{i}]")
        names[cid] = _require(cat, "name", str, path, f"categories[{i}]")
    if sorted(names) != list(range(len(names))) or len(names) != len(cats_raw):
        raise SchemaViolation("category ids must be exactly 0..N-1", path=path, field="categories")

    gts: dict[FrameId, list[GroundTruthObject]] = {f: [] for f in dims}
    for i, ann in enumerate(anns_raw):
        where = f"annotations[{i}]"
        fid = _require(ann, "image_id", int, path, where)
        if fid not in dims:
            raise UnknownImageId(f"image_id {fid} not listed in images", path=path, field=f"{where}.image_id")
        cid = _require(ann, "class_id", int, path, where)
        box = AxisAlignedBox(*_numbers(_require(ann, "bbox", list, path, where), 4, path, f"{where}.bbox"))
        mask = ann.get("mask")
        if mask is None:
            segment = PixelSet.from_box(box)
        else:
            counts = _require(mask, "counts", list, path, f"{where}.mask")
            d = dims[fid]
            segment = PixelSet.from_mask(rle_decode(counts, d.width, d.height, path=path, field=f"{where}.mask.counts"))
        gts[fid].append(GroundTruthObject(fid, segment, box, cid))

    dataset = Dataset(images, gts, [names[k] for k in range(len(names))])
    if validate:
        problems = validate_dataset(dataset)
        if problems:
            raise SchemaViolation("; ".join(str(p) for p in problems[:5]), path=path, field="annotations")
    return dataset


def parse_ground_truth(path: str | Path, validate: bool = True) -> Dataset:
    return ground_truth_from_dict(_load(path), str(path), validate)


def ground_truth_to_dict(dataset: Dataset) -> dict[str, Any]:
    anns = []
    for frame, dims in dataset.images:
        for gt in dataset.gts(frame):
            ann: dict[str, Any] = {"image_id": frame, "class_id": gt.class_id, "bbox": list(gt.box.as_tuple())}
            if gt.segment != PixelSet.from_box(gt.box):
                ann["mask"] = {"counts": rle_encode(gt.segment.to_mask(dims))}
            anns.append(ann)
    return {
        "schema_version": SCHEMA_VERSION,
        "images": [{"id": f, "width": d.width, "height": d.height} for f, d in dataset.images],
        "categories": [{"id": k, "name": n} for k, n in enumerate(dataset.class_names)],
        "annotations": anns,
    }


def _covariance(value: Any, path: str, where: str) -> np.ndarray:
    if isinstance(value, list) and len(value) == 2 and all(isinstance(r, list) for r in value):
        flat = _numbers(value[0], 2, path, where) + _numbers(value[1], 2, path, where)
    else:
        flat = _numbers(value, 4, path, where)
    cov = np.array(flat, dtype=float).reshape(2, 2)
    if abs(cov[0, 1] - cov[1, 0]) > SYMMETRY_TOL:
        raise SchemaViolation("covariance is not symmetric", path=path, field=where)
    corner = GaussianCorner((0.0, 0.0), cov)
    if not corner.is_psd:
        eig = np.linalg.eigvalsh(0.5 * (cov + cov.T)).min()
        raise NonPSDCovariance(f"{path}:{where}: covariance has eigenvalue {eig:.6g} < 0")
    return cov


def detection_from_dict(item: Any, n_classes: int, dims: Mapping[FrameId, ImageDims], path: str, where: str) -> Detection:
    fid = _require(item, "image_id", int, path, where)
    if fid not in dims:
        raise UnknownImageId(f"image_id {fid} not in ground truth", path=path, field=f"{where}.image_id")
    probs = _require(item, "label_probs", list, path, where)
    probs = _numbers(probs, len(probs), path, f"{where}.label_probs")
    if len(probs) != n_classes:
        raise SchemaViolation(f"label_probs has {len(probs)} entries, expected {n_classes}", path=path, field=f"{where}.label_probs")
    if any(p < 0 or p > 1 for p in probs) or abs(sum(probs) - 1.0) > LABEL_SUM_TOL:
        raise SchemaViolation("label_probs must be probabilities summing to 1", path=path, field=f"{where}.label_probs")
    kind = _require(item, "type", str, path, where)
    if kind == "bbox":
        box = AxisAlignedBox(*_numbers(_require(item, "bbox", list, path, where), 4, path, f"{where}.bbox"))
        if not box.is_ordered:
            raise SchemaViolation("bbox corners out of order", path=path, field=f"{where}.bbox")
        prob = item.get("spatial_prob")
        if prob is not None and (not isinstance(prob, (int, float)) or not 0 <= prob <= 1):
            raise SchemaViolation("spatial_prob must lie in [0, 1]", path=path, field=f"{where}.spatial_prob")
        geom: Any = ConventionalBox(box, None if prob is None else float(prob))
    elif kind == "pbox":
        tl = GaussianCorner(_numbers(_require(item, "tl_mean", list, path, where), 2, path, f"{where}.tl_mean"),
                            _covariance(_require(item, "tl_cov", list, path, where), path, f"{where}.tl_cov"))
        br = GaussianCorner(_numbers(_require(item, "br_mean", list, path, where), 2, path, f"{where}.br_mean"),
                            _covariance(_require(item, "br_cov", list, path, where), path, f"{where}.br_cov"))
        if tl.mean[0] > br.mean[0] or tl.mean[1] > br.mean[1]:
            raise SchemaViolation("top-left mean must not exceed bottom-right mean", path=path, field=where)
        geom = ProbabilisticBox(tl, br)
    else:
        raise SchemaViolation(f"unknown detection type {kind!r}", path=path, field=f"{where}.type")
    return Detection(fid, geom, probs)


def detections_from_dict(doc: Any, dataset: Dataset, path: str = "<memory>") -> dict[FrameId, list[Detection]]:
    _check_version(doc, path)
    items = _require(doc, "detections", list, path, "$")
    dims = {f: d for f, d in dataset.images}
    out: dict[FrameId, list[Detection]] = {}
    for j, item in enumerate(items):
        det = detection_from_dict(item, dataset.num_classes, dims, path, f"detections[{j}]")
        out.setdefault(det.frame, []).append(det)
    return out


def parse_detections(path: str | Path, dataset: Dataset) -> dict[FrameId, list[Detection]]:
    return detections_from_dict(_load(path), dataset, str(path))


def _num(v: float) -> float | int:
    return int(v) if float(v).is_integer() and abs(v) < 2**53 else float(v)


def detection_to_dict(det: Detection) -> dict[str, Any]:
    geom = det.geometry
    out: dict[str, Any] = {"image_id": det.frame}
    if isinstance(geom, ConventionalBox):
        out["type"] = "bbox"
        out["bbox"] = [_num(v) for v in geom.box.as_tuple()]
        if geom.inside_prob is not None:
            out["spatial_prob"] = geom.inside_prob
    else:
        out["type"] = "pbox"
        out["tl_mean"] = [_num(v) for v in geom.top_left.mean]
        out["tl_cov"] = [_num(v) for v in geom.top_left.covariance.reshape(-1)]
        out["br_mean"] = [_num(v) for v in geom.bottom_right.mean]
        out["br_cov"] = [_num(v) for v in geom.bottom_right.covariance.reshape(-1)]
    out["label_probs"] = [float(p) for p in det.label_dist]
    return out


def detections_to_dict(detections: Mapping[FrameId, Sequence[Detection]]) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "detections": [detection_to_dict(d) for f in sorted(detections) for d in detections[f]],
    }


def write_json(doc: Any, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
