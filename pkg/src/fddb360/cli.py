"""Command line entry point: ``fddb360 {synthesize,augment,folds,evaluate}``.

Exit codes: 0 success, 1 fatal configuration error, 2 finished with
per-image failures.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .annotations import parse_detections, parse_rect
from .augment import AUGMENTATIONS
from .evaluation import (discrete_roc, fn_scatter, match_dataset, pr_curve, write_fn_csv,
                         write_roc_csv)
from .exceptions import ConfigError, ParseError
from .pipeline import PipelineConfig, augment_directory, emit_folds, parse_fill_color, run_synthesis
from .raster import read_image

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2

logger = logging.getLogger("fddb360")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fddb360", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="build fisheye samples from FDDB images")
    s.add_argument("--config", type=Path, help="key = value file; flags override it")
    s.add_argument("--images", dest="input_image_root", help="FDDB image root (originalPics)")
    s.add_argument("--annotations", dest="fddb_annotation_files", nargs="+",
                   help="FDDB ellipse list files, one per fold")
    s.add_argument("--output", dest="output_root")
    s.add_argument("--patch-radius", type=int)
    s.add_argument("--exclusion-penalty", type=float)
    s.add_argument("--face-dilation", type=float)
    s.add_argument("--fill-color", help="RRGGBB hex (default 000000)")
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", dest="worker_count", type=int)
    s.add_argument("--augment", dest="augmentations", nargs="*", metavar="OP",
                   help=f"also write augmented copies; ops from {', '.join(AUGMENTATIONS)}")
    s.add_argument("--search-window", type=int,
                   help="limit inpainting source search to this many pixels around the target")
    s.add_argument("--patches", dest="n_patches", type=int)

    a = sub.add_parser("augment", help="materialize flipped/rotated copies of a synthesized set")
    a.add_argument("--input", required=True, type=Path, help="synthesize output root")
    a.add_argument("--output", required=True, type=Path)
    a.add_argument("--ops", nargs="+", default=list(AUGMENTATIONS))
    a.add_argument("--mode", choices=("all", "random"), default="all")
    a.add_argument("--seed", type=int, default=0)

    f = sub.add_parser("folds", help="write the five train/test splits")
    f.add_argument("--root", required=True, type=Path, help="synthesize output root")

    e = sub.add_parser("evaluate", help="PR / TP-vs-FP curves and FN scatter for detections")
    e.add_argument("--ground-truth", required=True, type=Path, help="rectangle annotation file")
    e.add_argument("--detections", required=True, type=Path, help="'x y w h score' detection file")
    side = e.add_mutually_exclusive_group(required=True)
    side.add_argument("--image-side", type=float, help="side length shared by all images")
    side.add_argument("--image-root", type=Path, help="read each image's side from <root>/<path>.png")
    e.add_argument("--iou", type=float, default=0.5)
    e.add_argument("--score-threshold", type=float, default=None,
                   help="operating point for the FN scatter (default: all detections)")
    e.add_argument("--output", required=True, type=Path)
    return parser


_CONFIG_FIELDS = ("input_image_root", "fddb_annotation_files", "output_root", "patch_radius",
                  "exclusion_penalty", "face_dilation", "fill_color", "seed", "worker_count",
                  "augmentations", "search_window", "n_patches")


def _config_from_args(args) -> PipelineConfig:
    given = {k: getattr(args, k) for k in _CONFIG_FIELDS if getattr(args, k) is not None}
    if "fill_color" in given:
        given["fill_color"] = parse_fill_color(given["fill_color"])
    if args.config is not None:
        return PipelineConfig.from_file(args.config, **given)
    missing = [k for k in ("input_image_root", "fddb_annotation_files", "output_root") if k not in given]
    if missing:
        raise ConfigError(f"missing required setting(s): {', '.join(missing)}")
    return PipelineConfig.from_mapping(given)


def _synthesize(args) -> int:
    config = _config_from_args(args)
    manifest = run_synthesis(config)
    print(f"images={manifest.images} faces={manifest.faces} excluded={len(manifest.failures)}")
    return EXIT_PARTIAL if manifest.failures else EXIT_OK


def _augment(args) -> int:
    bad = [o for o in args.ops if o not in AUGMENTATIONS]
    if bad:
        raise ConfigError(f"unsupported augmentation(s) {bad}")
    written = augment_directory(args.input, args.output, args.ops, args.mode, args.seed)
    print(f"images={len(written)}")
    return EXIT_OK


def _folds(args) -> int:
    for train, test in emit_folds(args.root):
        print(f"{train}\t{test}")
    return EXIT_OK


def _evaluate(args) -> int:
    with open(args.ground_truth) as fh:
        gt = parse_rect(fh)
    with open(args.detections) as fh:
        dets = parse_detections(fh)
    if args.image_side is not None:
        sides = args.image_side
    else:
        sides = {r.image_path: read_image(args.image_root / (r.image_path + ".png")).shape[0]
                 for r in gt}
    matches = match_dataset(gt, dets, args.iou)
    curve, auc = pr_curve(matches)
    roc = discrete_roc(matches)
    fns = fn_scatter(gt, dets, sides, args.iou, args.score_threshold)
    args.output.mkdir(parents=True, exist_ok=True)
    with open(args.output / "pr.csv", "w", newline="") as fh:
        curve.to_csv(fh)
    with open(args.output / "roc.csv", "w", newline="") as fh:
        write_roc_csv(roc, fh)
    with open(args.output / "fn.csv", "w", newline="") as fh:
        write_fn_csv(fns, fh)
    print(f"auc={auc:.6f} gt={matches.total_gt} detections={len(matches.scores)} fn={len(fns)}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"synthesize": _synthesize, "augment": _augment,
               "folds": _folds, "evaluate": _evaluate}[args.command]
    try:
        return handler(args)
    except (ConfigError, ParseError, FileNotFoundError) as exc:
        print(f"fddb360: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
