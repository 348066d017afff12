"""Descriptor aggregation: per-layer residual sums, concatenation into the
global vector, and temporal smoothing of reference sequences."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .preprocess import RefineConfig, RefineParams, refine_layer
from .segmap import CategoryConfig, SegmentationMap, build_layers
from .shapectx import PointDescriptor, ShapeContextParams, describe_layer_points
from .skeleton import SkeletonFeatures, extract_features


@dataclass(frozen=True, eq=False)
class LayerDescriptor:
    """Unit-norm aggregate of one layer; the zero vector marks a layer
    with nothing to describe."""

    values: np.ndarray  # (sectors * rings,) float64
    layer_index: int

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", np.ascontiguousarray(self.values, dtype=np.float64)
        )


@dataclass(frozen=True, eq=False)
class GlobalDescriptor:
    """Fixed-length whole-image descriptor (unit norm, or zero if empty)."""

    values: np.ndarray  # (K * sectors * rings,) float64
    frame_id: int
    empty: bool = False
    smoothed: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", np.ascontiguousarray(self.values, dtype=np.float64)
        )

    def __len__(self) -> int:
        return self.values.shape[0]


def aggregate_layer(
    center_desc: PointDescriptor,
    point_descs: Sequence[PointDescriptor],
    layer_index: int = 0,
) -> LayerDescriptor:
    """Sum keypoint-minus-center residuals and normalize the sum.

    The residual sum is accumulated in integer counts, so the result is
    exactly invariant to the order of the keypoint descriptors. An empty
    keypoint list, or residuals that cancel exactly, yield the zero
    vector rather than a division by zero.
    """
    size = center_desc.bins.shape[0]
    if not point_descs:
        return LayerDescriptor(np.zeros(size, dtype=np.float64), layer_index)
    total = np.zeros(size, dtype=np.int64)
    for desc in point_descs:
        if desc.bins.shape[0] != size:
            raise ValueError(
                f"descriptor length {desc.bins.shape[0]} != center length {size}"
            )
        total += desc.bins
    residual = (total - len(point_descs) * center_desc.bins).astype(np.float64)
    norm = float(np.linalg.norm(residual))
    if norm == 0.0:
        return LayerDescriptor(np.zeros(size, dtype=np.float64), layer_index)
    return LayerDescriptor(residual / norm, layer_index)


def build_global(
    layer_descs: Sequence[LayerDescriptor], frame_id: int = 0
) -> GlobalDescriptor:
    """Concatenate layer descriptors in layer order and L2-normalize."""
    if not layer_descs:
        raise ValueError("no layer descriptors")
    indices = [d.layer_index for d in layer_descs]
    if indices != list(range(len(layer_descs))):
        raise ValueError(f"layer descriptors out of order: {indices}")
    stacked = np.concatenate([d.values for d in layer_descs])
    norm = float(np.linalg.norm(stacked))
    if norm == 0.0:
        return GlobalDescriptor(stacked, frame_id=frame_id, empty=True)
    return GlobalDescriptor(stacked / norm, frame_id=frame_id, empty=False)


def temporal_smooth(
    descriptors: Sequence[GlobalDescriptor], half_window: int
) -> list[GlobalDescriptor]:
    """Blend each descriptor with its sequence neighbours.

    Output i is the sum of the raw descriptors over [i - t, i + t],
    clamped to the sequence bounds, re-normalized to unit length. Meant
    for reference databases only; queries arrive online and are never
    smoothed. t = 0 returns the inputs unchanged (a window of one).
    """
    if half_window < 0:
        raise ValueError(f"half_window must be >= 0, got {half_window}")
    if not descriptors:
        raise ValueError("empty descriptor sequence")
    if half_window == 0:
        return [replace(d, smoothed=True) for d in descriptors]
    values = np.stack([d.values for d in descriptors])
    count = len(descriptors)
    out = []
    for i in range(count):
        lo = max(0, i - half_window)
        hi = min(count, i + half_window + 1)
        summed = values[lo:hi].sum(axis=0)
        norm = float(np.linalg.norm(summed))
        if norm == 0.0:
            out.append(
                GlobalDescriptor(
                    summed, frame_id=descriptors[i].frame_id, empty=True, smoothed=True
                )
            )
        else:
            out.append(
                GlobalDescriptor(
                    summed / norm,
                    frame_id=descriptors[i].frame_id,
                    empty=False,
                    smoothed=True,
                )
            )
    return out


def _resolve_refine(
    refine: RefineParams | RefineConfig | None, width: int, height: int
) -> RefineParams | None:
    if isinstance(refine, RefineConfig):
        return refine.resolve(width, height)
    return refine


def extract_layer_features(
    seg_map: SegmentationMap,
    categories: CategoryConfig,
    refine: RefineParams | RefineConfig | None,
) -> list[SkeletonFeatures]:
    """Layer the map, optionally refine each mask, and skeletonize."""
    params = _resolve_refine(refine, seg_map.width, seg_map.height)
    stack = build_layers(seg_map, categories)
    features = []
    for k in range(stack.num_layers):
        mask = stack.layers[k]
        if params is not None:
            mask = refine_layer(mask, params)
        features.append(extract_features(mask, layer_index=k))
    return features


def describe_all_layers(
    features: Sequence[SkeletonFeatures], sc_params: ShapeContextParams
) -> list[tuple[PointDescriptor, list[PointDescriptor]] | None]:
    return [describe_layer_points(f, sc_params) for f in features]


def aggregate_all_layers(
    described: Sequence[tuple[PointDescriptor, list[PointDescriptor]] | None],
    sc_params: ShapeContextParams,
    frame_id: int = 0,
) -> GlobalDescriptor:
    layers = []
    for k, pair in enumerate(described):
        if pair is None:
            layers.append(
                LayerDescriptor(np.zeros(sc_params.bins_per_point), layer_index=k)
            )
        else:
            center, points = pair
            layers.append(aggregate_layer(center, points, layer_index=k))
    return build_global(layers, frame_id=frame_id)


def features_to_global(
    features: Sequence[SkeletonFeatures],
    sc_params: ShapeContextParams,
    frame_id: int = 0,
) -> GlobalDescriptor:
    return aggregate_all_layers(
        describe_all_layers(features, sc_params), sc_params, frame_id
    )


def encode_image(
    seg_map: SegmentationMap,
    categories: CategoryConfig,
    refine: RefineParams | RefineConfig | None,
    sc_params: ShapeContextParams,
) -> GlobalDescriptor:
    """Full per-frame pipeline from label grid to global descriptor.

    Pass ``refine=None`` to skip mask cleanup (the no-preprocess mode).
    Deterministic: identical inputs produce identical descriptors.
    """
    features = extract_layer_features(seg_map, categories, refine)
    return features_to_global(features, sc_params, frame_id=seg_map.frame_id)
