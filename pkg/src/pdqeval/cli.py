"""Command-line interface: ``pdqeval evaluate|simulate|render|validate``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from .assign import assign_frame
from .errors import PDQError
from .formats import parse_detections, parse_ground_truth
from .model import validate_dataset, validate_detections
from .render import render_heatmap, render_overlay
from .score import evaluate, filter_by_threshold
from .simharness import EXPERIMENTS, SimConfig, default_scene, run_sweep, synthetic_square_scene
from .spatial import SpatialConfig, build_probability_map

THREADS_ENV = "PDQEVAL_THREADS"
EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"error[usage]: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _grid(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from exc


def _spatial(args: argparse.Namespace) -> SpatialConfig:
    return SpatialConfig(epsilon=args.eps, p_min=args.pmin, bvn_tolerance=args.bvn_tol)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pdqeval", description="Probability-based detection quality evaluation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def spatial_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--eps", type=float, default=1e-14, help="probability clamp (default 1e-14)")
        p.add_argument("--pmin", type=float, default=1e-4, help="support threshold (default 1e-4)")
        p.add_argument("--bvn-tol", type=float, default=1e-7, help="bivariate CDF tolerance")

    ev = sub.add_parser("evaluate", help="score detections against ground truth")
    ev.add_argument("--gt", required=True, type=Path)
    ev.add_argument("--det", required=True, type=Path)
    ev.add_argument("--tau", type=float, default=0.0, help="drop detections scoring below this")
    ev.add_argument("--weight", type=float, default=0.5, help="spatial weight in the geometric mean")
    ev.add_argument("--threads", type=int, default=_default_threads())
    ev.add_argument("--out", type=Path, help="write the JSON report here")
    ev.add_argument("--map", action="store_true", help="also compute COCO-style mAP")
    spatial_flags(ev)

    sim = sub.add_parser("simulate", help="run a simulated-detector sweep")
    sim.add_argument("--experiment", required=True, choices=sorted(EXPERIMENTS))
    sim.add_argument("--grid", required=True, type=_grid, help="comma-separated parameter values")
    sim.add_argument("--reps", type=int, default=20)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, type=Path, help="output directory")
    sim.add_argument("--reported-variance", type=float, default=0.0)
    sim.add_argument("--true-variance", type=float, default=0.0)
    sim.add_argument("--label-prob", type=float, default=1.0)
    sim.add_argument("--n-false", type=int, default=0)
    sim.add_argument("--full-scale", action="store_true", help="use the 2000x2000 square scene")
    sim.add_argument("--no-map", action="store_true")
    sim.add_argument("--plot", action="store_true", help="also write sweep.png")
    sim.add_argument("--workers", type=int, default=_default_threads())
    spatial_flags(sim)

    rd = sub.add_parser("render", help="draw a TP/FP/FN overlay or a heatmap for one frame")
    rd.add_argument("--gt", required=True, type=Path)
    rd.add_argument("--det", required=True, type=Path)
    rd.add_argument("--frame", required=True, type=int)
    rd.add_argument("--out", required=True, type=Path)
    rd.add_argument("--heatmap", type=int, metavar="J", help="render detection J's probability map instead")
    rd.add_argument("--tau", type=float, default=0.0)
    rd.add_argument("--weight", type=float, default=0.5)
    spatial_flags(rd)

    va = sub.add_parser("validate", help="check input files")
    va.add_argument("--gt", required=True, type=Path)
    va.add_argument("--det", type=Path)
    return parser


def _cmd_evaluate(args: argparse.Namespace) -> int:
    dataset = parse_ground_truth(args.gt)
    dets = parse_detections(args.det, dataset)
    report = evaluate(dataset, dets, _spatial(args), args.tau, args.weight, args.threads, compute_map=args.map)
    print(report.format_table())
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.out:
        args.out.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    base = SimConfig(
        true_variance=args.true_variance,
        reported_variance=args.reported_variance,
        gt_label_prob=args.label_prob,
        n_false=args.n_false,
    )
    dataset = synthetic_square_scene() if args.full_scale else default_scene(args.experiment)
    result = run_sweep(
        args.experiment, args.grid, args.reps, args.seed, base, dataset,
        _spatial(args), with_map=not args.no_map, workers=args.workers,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    result.to_csv(args.out / "sweep.csv")
    if args.plot:
        result.plot(args.out / "sweep.png")
    means = result.mean()
    for v in result.values():
        print(f"{args.experiment}={v:g}  pdq={means[v]:.6f}")
    return EXIT_OK


def _cmd_render(args: argparse.Namespace) -> int:
    dataset = parse_ground_truth(args.gt)
    if not dataset.has_frame(args.frame):
        raise PDQError(f"frame {args.frame} not in ground truth")
    dims = dataset.dims(args.frame)
    dets = filter_by_threshold(parse_detections(args.det, dataset).get(args.frame, []), args.tau)
    cfg = _spatial(args)
    if args.heatmap is not None:
        if not 0 <= args.heatmap < len(dets):
            raise PDQError(f"detection {args.heatmap} not in frame {args.frame}")
        render_heatmap(build_probability_map(dets[args.heatmap], dims, cfg), args.out)
        return EXIT_OK
    gts = dataset.gts(args.frame)
    assignment = assign_frame(gts, dets, dims, cfg, args.weight, frame=args.frame)
    render_overlay(dims, gts, dets, assignment, args.out)
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    dataset = parse_ground_truth(args.gt, validate=False)
    problems = validate_dataset(dataset)
    if args.det and not problems:
        problems += validate_detections(parse_detections(args.det, dataset), dataset)
    for p in problems:
        print(f"violation: {p}", file=sys.stderr)
    if problems:
        return EXIT_INVALID
    print("ok")
    return EXIT_OK


COMMANDS = {
    "evaluate": _cmd_evaluate,
    "simulate": _cmd_simulate,
    "render": _cmd_render,
    "validate": _cmd_validate,
}


def cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except PDQError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error[invalid_argument]: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
