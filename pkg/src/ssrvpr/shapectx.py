"""Log-polar shape-context histograms over skeleton point clouds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .skeleton import SkeletonFeatures


@dataclass(frozen=True)
class ShapeContextParams:
    """Histogram geometry: ring/sector counts and the outer radius.

    ``radius=None`` means "half the image diagonal", resolved per image,
    so each descriptor sees the whole frame from any reference point.
    """

    rings: int = 5
    sectors: int = 12
    radius: float | None = None

    def __post_init__(self) -> None:
        if self.rings < 1 or self.sectors < 1:
            raise ValueError("rings and sectors must be >= 1")
        if self.radius is not None and not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @property
    def bins_per_point(self) -> int:
        return self.rings * self.sectors

    def resolve_radius(self, width: int, height: int) -> float:
        if self.radius is not None:
            return self.radius
        return math.hypot(width, height) / 2.0

    def signature(self) -> str:
        radius = "auto" if self.radius is None else repr(float(self.radius))
        return f"rings={self.rings},sectors={self.sectors},radius={radius}"


@dataclass(frozen=True, eq=False)
class PointDescriptor:
    """Occupancy counts around one reference point, sector-major layout."""

    bins: np.ndarray  # (sectors * rings,) int64
    reference: tuple[float, float]

    def __post_init__(self) -> None:
        bins = np.ascontiguousarray(self.bins, dtype=np.int64)
        if bins.ndim != 1:
            raise ValueError("bins must be a flat vector")
        if (bins < 0).any():
            raise ValueError("bins must be non-negative counts")
        object.__setattr__(self, "bins", bins)

    @property
    def total(self) -> int:
        return int(self.bins.sum())


def ring_boundaries(rings: int, radius: float) -> np.ndarray:
    """Upper ring bounds R/2^(rings-1), ..., R/2, R (base-2 log spacing)."""
    exponents = -(rings - 1 - np.arange(rings, dtype=np.float64))
    return radius * 2.0**exponents


def describe_point(
    ref: tuple[float, float], cloud: np.ndarray, params: ShapeContextParams
) -> PointDescriptor:
    """Histogram the cloud around `ref` on the log-polar template.

    A cloud point q with 0 < dist(ref, q) <= R lands in the smallest ring
    whose boundary is >= dist, and in sector floor(angle / (2*pi/M)) with
    the angle measured from the +x axis in image coordinates (y down),
    normalized to [0, 2*pi). Points at distance 0 or beyond R are
    skipped, so the counts always sum to the number of in-range points.
    """
    if params.radius is None:
        raise ValueError("describe_point needs an explicit radius")
    cloud = np.asarray(cloud, dtype=np.float64).reshape(-1, 2)
    refs = np.array([[ref[0], ref[1]]], dtype=np.float64)
    boundaries = ring_boundaries(params.rings, params.radius)
    counts = _kernels.shape_context_bins(refs, cloud, boundaries, params.sectors)
    return PointDescriptor(bins=counts[0], reference=(float(ref[0]), float(ref[1])))


def describe_layer_points(
    features: SkeletonFeatures, params: ShapeContextParams
) -> tuple[PointDescriptor, list[PointDescriptor]] | None:
    """Describe the layer centroid and every keypoint against the skeleton.

    The point cloud for all descriptors of a layer is that layer's full
    skeleton pixel set; the centroid reference stays real-valued. Returns
    None for an empty layer.
    """
    if features.is_empty:
        return None
    radius = params.resolve_radius(features.width, features.height)
    boundaries = ring_boundaries(params.rings, radius)
    cloud = features.skeleton_xy.astype(np.float64)
    cx, cy = features.centroid
    refs = np.concatenate(
        [np.array([[cx, cy]], dtype=np.float64),
         features.keypoints_xy.astype(np.float64)],
        axis=0,
    )
    counts = _kernels.shape_context_bins(refs, cloud, boundaries, params.sectors)
    center = PointDescriptor(bins=counts[0], reference=(cx, cy))
    points = [
        PointDescriptor(
            bins=counts[i + 1],
            reference=(float(xy[0]), float(xy[1])),
        )
        for i, xy in enumerate(features.keypoints_xy)
    ]
    return center, points
