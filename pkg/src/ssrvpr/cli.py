"""Command-line front end: encode, match, eval, noise, timings, and a
skeleton-overlay debug renderer."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from . import _kernels
from .aggregate import (
    GlobalDescriptor,
    aggregate_all_layers,
    describe_all_layers,
    encode_image,
    extract_layer_features,
    temporal_smooth,
)
from .database import (
    DatabaseError,
    DescriptorDatabase,
    FingerprintMismatchError,
    load_database,
    params_fingerprint,
    save_database,
)
from .evaluation import (
    build_ground_truth,
    load_ground_truth,
    load_poses,
    noise_sweep,
    pr_curve,
    auc,
    recall_at_100_precision,
    recall_at_n,
)
from .matcher import MatchResult, match_database, match_query
from .preprocess import RefineConfig, load_refine_config, refine_layer
from .segmap import (
    CategoryConfig,
    ConfigError,
    build_layers,
    load_category_config,
    load_segmentation_map,
    read_config_file,
)
from .shapectx import ShapeContextParams

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".pgm", ".bmp", ".tif", ".tiff")
DEFAULT_DELTAS = (25, 50, 75, 100, 125, 150)
DEFAULT_THRESHOLD = 0.8


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs, parsed from one config file."""

    categories: CategoryConfig
    refine: RefineConfig
    shape_context: ShapeContextParams
    temporal_window: int
    threshold: float

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        categories = load_category_config(path)
        refine = load_refine_config(path)
        parser = read_config_file(path)
        sc_kwargs = {}
        if parser.has_section("shape_context"):
            sec = parser["shape_context"]
            try:
                if "rings" in sec:
                    sc_kwargs["rings"] = int(sec["rings"])
                if "sectors" in sec:
                    sc_kwargs["sectors"] = int(sec["sectors"])
                radius = sec.get("radius", "auto").strip().lower()
                if radius not in ("", "auto"):
                    sc_kwargs["radius"] = float(radius)
            except ValueError as exc:
                raise ConfigError(f"{path}: bad [shape_context] value: {exc}")
        try:
            shape_context = ShapeContextParams(**sc_kwargs)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}")
        temporal_window = 3
        if parser.has_section("temporal") and "window" in parser["temporal"]:
            try:
                temporal_window = int(parser["temporal"]["window"])
            except ValueError:
                raise ConfigError(f"{path}: bad [temporal] window")
        if temporal_window < 0:
            raise ConfigError(f"{path}: [temporal] window must be >= 0")
        threshold = DEFAULT_THRESHOLD
        if parser.has_section("matching") and "threshold" in parser["matching"]:
            try:
                threshold = float(parser["matching"]["threshold"])
            except ValueError:
                raise ConfigError(f"{path}: bad [matching] threshold")
        return cls(categories, refine, shape_context, temporal_window, threshold)


def list_label_images(directory: str | Path) -> list[Path]:
    """Label images in lexicographic order; that order is frame order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory} is not a directory")
    files = sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not files:
        raise FileNotFoundError(f"no label images found in {directory}")
    return files


def _encode_one(
    path: Path,
    frame_id: int,
    run: RunConfig,
    preprocess: bool,
) -> GlobalDescriptor:
    seg_map = load_segmentation_map(path, frame_id=frame_id)
    refine = run.refine if preprocess else None
    return encode_image(seg_map, run.categories, refine, run.shape_context)


def _encode_directory(
    images: list[Path], run: RunConfig, preprocess: bool, workers: int,
    first_frame_id: int = 0,
) -> list[GlobalDescriptor]:
    ids = range(first_frame_id, first_frame_id + len(images))
    if workers <= 1:
        return [
            _encode_one(p, i, run, preprocess) for p, i in zip(images, ids)
        ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(
            pool.map(
                _encode_one,
                images,
                ids,
                [run] * len(images),
                [preprocess] * len(images),
            )
        )


def cmd_encode(args: argparse.Namespace) -> int:
    run = RunConfig.from_file(args.config)
    images = list_label_images(args.images)
    preprocess = not args.no_preprocess
    refine = run.refine if preprocess else None
    configured_window = run.temporal_window
    fingerprint = params_fingerprint(
        run.categories, refine, run.shape_context, configured_window
    )

    existing: DescriptorDatabase | None = None
    first_id = 0
    if args.append:
        existing = load_database(args.out)
        if existing.fingerprint != fingerprint:
            raise FingerprintMismatchError(
                f"{args.out} was built with different parameters; "
                "cannot append"
            )
        if args.role == "reference" and configured_window > 0:
            raise DatabaseError(
                "cannot append to a smoothed reference database: smoothing "
                "windows span the whole sequence, re-encode instead"
            )
        first_id = len(existing)

    raw = _encode_directory(
        images, run, preprocess, args.workers, first_frame_id=first_id
    )
    if args.role == "reference":
        descriptors = temporal_smooth(raw, configured_window)
        applied_window = configured_window
    else:
        descriptors = raw
        applied_window = 0
    if existing is not None:
        descriptors = existing.descriptors + descriptors
    db = DescriptorDatabase(
        descriptors,
        fingerprint=fingerprint,
        num_layers=run.categories.num_layers,
        sectors=run.shape_context.sectors,
        rings=run.shape_context.rings,
        smoothing_window=applied_window,
    )
    save_database(db, args.out)
    empty = sum(1 for d in descriptors if d.empty)
    log.info(
        "encoded %d frames (%d empty) as %s role into %s [kernels: %s]",
        len(images), empty, args.role, args.out, _kernels.BACKEND,
    )
    return 0


def _write_results_csv(path: str | Path, results: list[MatchResult], top: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "rank", "ref_id", "score", "accepted"])
        for res in results:
            limit = len(res.ref_ids) if top <= 0 else min(top, len(res.ref_ids))
            for rank in range(limit):
                writer.writerow(
                    [
                        res.query_id,
                        rank + 1,
                        int(res.ref_ids[rank]),
                        f"{float(res.scores[rank]):.9f}",
                        int(res.accepted and rank == 0),
                    ]
                )


def read_results_csv(path: str | Path) -> list[MatchResult]:
    """Rebuild per-query rankings from a `ssrvpr match` output file."""
    rows: dict[int, list[tuple[int, int, float]]] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.setdefault(int(rec["query_id"]), []).append(
                (int(rec["rank"]), int(rec["ref_id"]), float(rec["score"]))
            )
    results = []
    for query_id in sorted(rows):
        ranked = sorted(rows[query_id])
        results.append(
            MatchResult(
                query_id=query_id,
                ref_ids=np.array([r[1] for r in ranked], dtype=np.int64),
                scores=np.array([r[2] for r in ranked], dtype=np.float64),
                threshold=0.0,
                accepted=False,
            )
        )
    return results


def cmd_match(args: argparse.Namespace) -> int:
    query_db = load_database(args.query_db)
    ref_db = load_database(args.ref_db)
    results = match_database(query_db, ref_db, args.threshold)
    _write_results_csv(args.out, results, args.top)
    accepted = sum(1 for r in results if r.accepted)
    log.info(
        "matched %d queries against %d references; %d accepted at %.3f",
        len(query_db), len(ref_db), accepted, args.threshold,
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    results = read_results_csv(args.results)
    if args.gt:
        gt = load_ground_truth(args.gt)
    else:
        if not (args.query_poses and args.ref_poses):
            raise ValueError("need either --gt or both --query-poses/--ref-poses")
        gt = build_ground_truth(
            load_poses(args.query_poses), load_poses(args.ref_poses), args.radius
        )
    missing = [r.query_id for r in results if r.query_id not in gt]
    if missing:
        raise ValueError(f"queries missing from ground truth: {missing[:5]} ...")
    points = pr_curve(results, gt)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "pr_curve.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "precision", "recall", "tp", "fp", "fn", "tn"])
        for p in points:
            writer.writerow(
                [f"{p.threshold:.9f}", f"{p.precision:.9f}", f"{p.recall:.9f}",
                 p.tp, p.fp, p.fn, p.tn]
            )
    metrics = {
        "auc": auc(points),
        "recall_at_100_precision": recall_at_100_precision(points),
        "recall_at_1": recall_at_n(results, gt, 1),
    }
    with open(out_dir / "metrics.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for key, value in metrics.items():
            writer.writerow([key, f"{value:.6f}"])
    log.info(
        "AUC %.4f | Recall@100%%Precision %.2f | Recall@1 %.2f",
        metrics["auc"],
        metrics["recall_at_100_precision"],
        metrics["recall_at_1"],
    )
    return 0


def cmd_noise(args: argparse.Namespace) -> int:
    run = RunConfig.from_file(args.config)
    images = list_label_images(args.images)
    frames = [
        load_segmentation_map(p, frame_id=i) for i, p in enumerate(images)
    ]
    refine = None if args.no_preprocess else run.refine
    deltas = args.delta if args.delta else list(DEFAULT_DELTAS)
    means = noise_sweep(
        frames, run.categories, refine, run.shape_context,
        deltas, runs=args.runs, seed=args.seed,
    )
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta", "mean_recall_at_1"])
        for delta in deltas:
            writer.writerow([delta, f"{means[int(delta)]:.6f}"])
    for delta in deltas:
        log.info("delta ±%d -> mean Recall@1 %.3f", delta, means[int(delta)])
    return 0


def _timing_stats(samples: list[float]) -> tuple[float, float, float]:
    return max(samples), sum(samples) / len(samples), min(samples)


def cmd_timings(args: argparse.Namespace) -> int:
    run = RunConfig.from_file(args.config)
    images = list_label_images(args.images)
    preprocess = not args.no_preprocess
    refine = run.refine if preprocess else None

    feature_ms: list[float] = []
    encode_ms: list[float] = []
    descriptors: list[GlobalDescriptor] = []
    for i, path in enumerate(images):
        seg_map = load_segmentation_map(path, frame_id=i)
        t0 = time.perf_counter()
        features = extract_layer_features(seg_map, run.categories, refine)
        described = describe_all_layers(features, run.shape_context)
        t1 = time.perf_counter()
        descriptors.append(
            aggregate_all_layers(described, run.shape_context, frame_id=i)
        )
        t2 = time.perf_counter()
        feature_ms.append((t1 - t0) * 1e3)
        encode_ms.append((t2 - t1) * 1e3)

    db = DescriptorDatabase(
        descriptors,
        fingerprint=params_fingerprint(
            run.categories, refine, run.shape_context, 0
        ),
        num_layers=run.categories.num_layers,
        sectors=run.shape_context.sectors,
        rings=run.shape_context.rings,
    )
    pair_ms: list[float] = []
    for desc in descriptors:
        t0 = time.perf_counter()
        match_query(desc, db, threshold=0.0)
        t1 = time.perf_counter()
        pair_ms.append((t1 - t0) * 1e3 / len(db))

    rows = [
        ("feature_extraction", *_timing_stats(feature_ms)),
        ("descriptor_encoding", *_timing_stats(encode_ms)),
        ("matching_per_pair", *_timing_stats(pair_ms)),
    ]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "max_ms", "avg_ms", "min_ms"])
        for name, mx, avg, mn in rows:
            writer.writerow([name, f"{mx:.6f}", f"{avg:.6f}", f"{mn:.6f}"])
    for name, mx, avg, mn in rows:
        log.info("%s: max %.3f ms, avg %.3f ms, min %.3f ms", name, mx, avg, mn)
    log.info("kernel backend: %s", _kernels.BACKEND)
    return 0


def cmd_debug_skeleton(args: argparse.Namespace) -> int:
    run = RunConfig.from_file(args.config)
    seg_map = load_segmentation_map(args.image)
    if not 0 <= args.layer < run.categories.num_layers:
        raise ValueError(
            f"layer {args.layer} out of range 0..{run.categories.num_layers - 1}"
        )
    refine = None if args.no_preprocess else run.refine
    features = extract_layer_features(seg_map, run.categories, refine)[args.layer]

    canvas = np.zeros((seg_map.height, seg_map.width, 3), dtype=np.uint8)
    # refined layer mask as the backdrop, skeleton and keypoints on top
    stack = build_layers(seg_map, run.categories)
    layer_mask = stack.layers[args.layer]
    if refine is not None:
        layer_mask = refine_layer(
            layer_mask, refine.resolve(seg_map.width, seg_map.height)
        )
    canvas[layer_mask != 0] = (70, 70, 70)
    for x, y in features.skeleton_xy:
        canvas[y, x] = (255, 255, 255)
    for x, y in features.keypoints_xy:
        cv2.circle(canvas, (int(x), int(y)), 2, (0, 0, 255), -1)
    if features.centroid is not None:
        cx, cy = (int(round(v)) for v in features.centroid)
        cv2.drawMarker(canvas, (cx, cy), (0, 255, 0), cv2.MARKER_CROSS, 9, 1)
    if not cv2.imwrite(str(args.out), canvas):
        raise IOError(f"cannot write overlay {args.out}")
    log.info(
        "layer %d: %d skeleton px, %d keypoints -> %s",
        args.layer, len(features.skeleton_xy), len(features.keypoints_xy), args.out,
    )
    return 0


def _parse_delta_list(text: str) -> list[int]:
    try:
        deltas = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad delta list {text!r}")
    if not deltas or any(d < 0 for d in deltas):
        raise argparse.ArgumentTypeError("deltas must be non-negative integers")
    return deltas


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssrvpr",
        description="Semantic-skeleton place recognition over segmentation maps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode a label-image directory")
    enc.add_argument("--images", required=True, help="directory of label images")
    enc.add_argument("--config", required=True, help="pipeline config file")
    enc.add_argument("--role", choices=("query", "reference"), default="reference")
    enc.add_argument("--out", required=True, help="output database file")
    enc.add_argument("--no-preprocess", action="store_true")
    enc.add_argument("--append", action="store_true",
                     help="append frames to an existing database")
    enc.add_argument("--workers", type=int, default=1)
    enc.set_defaults(func=cmd_encode)

    mat = sub.add_parser("match", help="rank queries against references")
    mat.add_argument("--query-db", required=True)
    mat.add_argument("--ref-db", required=True)
    mat.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    mat.add_argument("--top", type=int, default=0,
                     help="ranks per query to write; 0 = all")
    mat.add_argument("--out", required=True, help="output CSV")
    mat.set_defaults(func=cmd_match)

    eva = sub.add_parser("eval", help="retrieval metrics for a results CSV")
    eva.add_argument("--results", required=True)
    eva.add_argument("--gt", help="direct ground-truth file")
    eva.add_argument("--query-poses")
    eva.add_argument("--ref-poses")
    eva.add_argument("--radius", type=float, default=5.0,
                     help="ground-truth distance threshold in metres")
    eva.add_argument("--out-dir", required=True)
    eva.set_defaults(func=cmd_eval)

    noi = sub.add_parser("noise", help="skeleton-jitter robustness sweep")
    noi.add_argument("--images", required=True)
    noi.add_argument("--config", required=True)
    noi.add_argument("--delta", type=_parse_delta_list, default=None,
                     help="comma-separated jitter magnitudes in pixels")
    noi.add_argument("--runs", type=int, default=20)
    noi.add_argument("--seed", type=int, default=0)
    noi.add_argument("--no-preprocess", action="store_true")
    noi.add_argument("--out", required=True, help="output CSV")
    noi.set_defaults(func=cmd_noise)

    tim = sub.add_parser("timings", help="per-stage wall-clock report")
    tim.add_argument("--images", required=True)
    tim.add_argument("--config", required=True)
    tim.add_argument("--no-preprocess", action="store_true")
    tim.add_argument("--out", required=True, help="output CSV")
    tim.set_defaults(func=cmd_timings)

    dbg = sub.add_parser("debug-skeleton",
                         help="render a skeleton/keypoint overlay image")
    dbg.add_argument("--image", required=True)
    dbg.add_argument("--config", required=True)
    dbg.add_argument("--layer", type=int, required=True)
    dbg.add_argument("--no-preprocess", action="store_true")
    dbg.add_argument("--out", required=True)
    dbg.set_defaults(func=cmd_debug_skeleton)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatabaseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
