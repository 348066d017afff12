"""Retrieval metrics, pose-based ground truth, and the skeleton-noise
robustness experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .aggregate import extract_layer_features, features_to_global
from .database import DescriptorDatabase, params_fingerprint
from .matcher import MatchResult, match_query
from .preprocess import RefineConfig, RefineParams
from .segmap import CategoryConfig, SegmentationMap
from .shapectx import ShapeContextParams
from .skeleton import SkeletonFeatures

GroundTruth = Mapping[int, frozenset[int]]


@dataclass(frozen=True)
class PoseRecord:
    frame_id: int
    position: tuple[float, float, float]

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.position):
            raise ValueError(f"non-finite pose for frame {self.frame_id}")


@dataclass(frozen=True)
class PRPoint:
    """One precision/recall operating point with its raw counts."""

    threshold: float
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int
    tn: int


def load_poses(path: str | Path) -> list[PoseRecord]:
    """Parse `frame_id x y z` lines; extra columns (rotations) ignored."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 4:
                raise ValueError(f"{path}:{line_no}: expected `frame_id x y z`")
            records.append(
                PoseRecord(
                    frame_id=int(parts[0]),
                    position=(float(parts[1]), float(parts[2]), float(parts[3])),
                )
            )
    return records


def load_ground_truth(path: str | Path) -> dict[int, frozenset[int]]:
    """Parse direct ground truth, one `query_id: ref_id ref_id ...` per line."""
    gt: dict[int, frozenset[int]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if ":" not in line:
                raise ValueError(f"{path}:{line_no}: expected `query_id: refs`")
            head, tail = line.split(":", 1)
            gt[int(head)] = frozenset(int(tok) for tok in tail.split())
    return gt


def build_ground_truth(
    query_poses: Sequence[PoseRecord],
    ref_poses: Sequence[PoseRecord],
    radius: float,
) -> dict[int, frozenset[int]]:
    """References strictly closer than `radius` metres count as correct."""
    ref_ids = np.array([r.frame_id for r in ref_poses], dtype=np.int64)
    ref_pos = np.array([r.position for r in ref_poses], dtype=np.float64)
    gt: dict[int, frozenset[int]] = {}
    for q in query_poses:
        delta = ref_pos - np.asarray(q.position)
        dist = np.sqrt((delta * delta).sum(axis=1))
        gt[q.frame_id] = frozenset(ref_ids[dist < radius].tolist())
    return gt


def pr_curve(results: Sequence[MatchResult], gt: GroundTruth) -> list[PRPoint]:
    """Precision/recall sweep under the single-best-match protocol.

    Each query is represented by its top-1 reference and score. For a
    threshold tau, queries scoring >= tau are predictions: a true
    positive when the top-1 is in the query's ground truth, otherwise a
    false positive. Queries below tau are false negatives when they have
    ground truth, true negatives otherwise. The sweep visits every
    distinct top-1 score, high to low; precision with zero predictions
    is defined as 1.
    """
    top = [(r.query_id, int(r.ref_ids[0]), float(r.scores[0])) for r in results]
    for query_id, _, _ in top:
        if query_id not in gt:
            raise ValueError(f"query {query_id} missing from ground truth")
    thresholds = sorted({score for _, _, score in top}, reverse=True)
    points = []
    for tau in thresholds:
        tp = fp = fn = tn = 0
        for query_id, best_ref, score in top:
            truth = gt[query_id]
            if score >= tau:
                if best_ref in truth:
                    tp += 1
                else:
                    fp += 1
            elif truth:
                fn += 1
            else:
                tn += 1
        precision = tp / (tp + fp) if (tp + fp) > 0 else 1.0
        recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
        points.append(
            PRPoint(
                threshold=tau,
                precision=precision,
                recall=recall,
                tp=tp,
                fp=fp,
                fn=fn,
                tn=tn,
            )
        )
    return points


def auc(points: Sequence[PRPoint]) -> float:
    """Trapezoidal area under the recall-sorted precision/recall curve.

    The curve is extended to recall 0 at the high-precision end. The
    sort is stable, so equal-recall points keep their sweep order.
    """
    if not points:
        raise ValueError("need at least one PR point")
    ordered = sorted(points, key=lambda p: p.recall)
    recalls = [0.0] + [p.recall for p in ordered]
    precisions = [ordered[0].precision] + [p.precision for p in ordered]
    area = 0.0
    for i in range(1, len(recalls)):
        area += (recalls[i] - recalls[i - 1]) * (
            precisions[i] + precisions[i - 1]
        ) / 2.0
    return area


def recall_at_100_precision(points: Sequence[PRPoint]) -> float:
    """Highest recall (in percent) among zero-false-positive points."""
    best = 0.0
    for p in points:
        if p.precision == 1.0 and p.recall > best:
            best = p.recall
    return 100.0 * best


def recall_at_n(results: Sequence[MatchResult], gt: GroundTruth, n: int) -> float:
    """Percent of queries with ground truth whose top-n hits it."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    relevant = 0
    hits = 0
    for r in results:
        truth = gt.get(r.query_id, frozenset())
        if not truth:
            continue
        relevant += 1
        if any(int(ref) in truth for ref in r.ref_ids[:n]):
            hits += 1
    if relevant == 0:
        return 0.0
    return 100.0 * hits / relevant


def jitter_features(
    features: SkeletonFeatures, delta: int, rng: np.random.Generator
) -> SkeletonFeatures:
    """Shift every skeleton pixel and keypoint by independent uniform
    integer offsets in [-delta, +delta] per axis, clamped to the image.

    Collisions are kept: two points landing on one pixel count twice.
    The centroid is left alone; it comes from the layer mask, not the
    skeleton.
    """
    if features.is_empty:
        return features
    high = np.array([features.width - 1, features.height - 1])
    sk = features.skeleton_xy + rng.integers(
        -delta, delta + 1, size=features.skeleton_xy.shape
    )
    kp = features.keypoints_xy + rng.integers(
        -delta, delta + 1, size=features.keypoints_xy.shape
    )
    return features.with_points(
        np.clip(sk, 0, high).astype(np.int32),
        np.clip(kp, 0, high).astype(np.int32),
    )


def _noise_rng(seed: int, delta: int, run: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, delta, run]))


def _noise_recalls(
    frame_features: Sequence[Sequence[SkeletonFeatures]],
    base_db: DescriptorDatabase,
    sc_params: ShapeContextParams,
    delta: int,
    runs: int,
    seed: int,
) -> list[float]:
    recalls = []
    for run in range(runs):
        rng = _noise_rng(seed, delta, run)
        hits = 0
        for i, layers in enumerate(frame_features):
            noisy = [jitter_features(f, delta, rng) for f in layers]
            desc = features_to_global(noisy, sc_params, frame_id=i)
            result = match_query(desc, base_db, threshold=0.0)
            if int(result.ref_ids[0]) == i:
                hits += 1
        recalls.append(hits / len(frame_features))
    return recalls


def _features_and_db(
    frames: Sequence[SegmentationMap],
    categories: CategoryConfig,
    refine: RefineParams | RefineConfig | None,
    sc_params: ShapeContextParams,
) -> tuple[list[list[SkeletonFeatures]], DescriptorDatabase]:
    if not frames:
        raise ValueError("no frames to encode")
    frame_features = [
        extract_layer_features(f, categories, refine) for f in frames
    ]
    base = [
        features_to_global(layers, sc_params, frame_id=i)
        for i, layers in enumerate(frame_features)
    ]
    db = DescriptorDatabase(
        base,
        fingerprint=params_fingerprint(categories, refine, sc_params, 0),
        num_layers=categories.num_layers,
        sectors=sc_params.sectors,
        rings=sc_params.rings,
        smoothing_window=0,
    )
    return frame_features, db


def noise_experiment(
    frames: Sequence[SegmentationMap],
    categories: CategoryConfig,
    refine: RefineParams | RefineConfig | None,
    sc_params: ShapeContextParams,
    delta: int,
    runs: int = 20,
    seed: int = 0,
) -> float:
    """Mean Recall@1 of jittered frames matched against their originals.

    Skeletons are extracted once; each run re-jitters the extracted
    coordinates, rebuilds the descriptors, and matches them against the
    unsmoothed original database. Per-run generators derive from
    (seed, delta, run), so results are reproducible and runs could be
    computed in parallel.
    """
    if delta < 0 or runs < 1:
        raise ValueError("delta must be >= 0 and runs >= 1")
    frame_features, db = _features_and_db(frames, categories, refine, sc_params)
    recalls = _noise_recalls(frame_features, db, sc_params, delta, runs, seed)
    return float(np.mean(recalls))


def noise_sweep(
    frames: Sequence[SegmentationMap],
    categories: CategoryConfig,
    refine: RefineParams | RefineConfig | None,
    sc_params: ShapeContextParams,
    deltas: Sequence[int],
    runs: int = 20,
    seed: int = 0,
) -> dict[int, float]:
    """`noise_experiment` over several jitter magnitudes, sharing the
    one-time skeleton extraction across all of them."""
    frame_features, db = _features_and_db(frames, categories, refine, sc_params)
    out = {}
    for delta in deltas:
        recalls = _noise_recalls(frame_features, db, sc_params, delta, runs, seed)
        out[int(delta)] = float(np.mean(recalls))
    return out
