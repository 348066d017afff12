"""Skeleton extraction, keypoint detection, and layer centroids."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels

# Stride used to sample stand-in keypoints on closed-loop skeletons that
# have no endpoints or junctions of their own.
LOOP_SAMPLE_STRIDE = 20


@dataclass(frozen=True, eq=False)
class SkeletonFeatures:
    """Per-layer skeleton pixels, keypoints, and layer centroid.

    Coordinates are (x, y) pixel pairs; the centroid is real-valued and
    None for an empty layer. Keypoints are always a subset of the
    skeleton pixels.
    """

    layer_index: int
    width: int
    height: int
    skeleton_xy: np.ndarray  # (n, 2) int32
    keypoints_xy: np.ndarray  # (m, 2) int32
    centroid: tuple[float, float] | None

    @property
    def is_empty(self) -> bool:
        return self.skeleton_xy.shape[0] == 0

    def with_points(
        self, skeleton_xy: np.ndarray, keypoints_xy: np.ndarray
    ) -> "SkeletonFeatures":
        return replace(self, skeleton_xy=skeleton_xy, keypoints_xy=keypoints_xy)


def _empty_features(layer_index: int, width: int, height: int) -> SkeletonFeatures:
    empty = np.zeros((0, 2), dtype=np.int32)
    return SkeletonFeatures(layer_index, width, height, empty, empty, None)


def thin(mask: np.ndarray) -> np.ndarray:
    """Reduce a binary mask to a one-pixel-wide skeleton.

    Iterative two-subpass thinning (batch deletion per subpass) plus a
    deterministic cleanup that breaks up the rare 2x2 blocks the batch
    passes can leave behind. Purely a function of the input mask.
    """
    mask = np.ascontiguousarray(mask != 0).astype(np.uint8)
    skel = _kernels.thin(mask)
    _collapse_square_blocks(skel)
    return skel


def _collapse_square_blocks(skel: np.ndarray) -> None:
    # Remove one corner per block, always the first (scan order) whose
    # deletion provably keeps its component connected. A block whose
    # every corner anchors an otherwise-unreachable branch (the pinwheel
    # pattern) is left alone rather than splitting the component.
    while True:
        s = skel != 0
        blocks = np.argwhere(s[:-1, :-1] & s[:-1, 1:] & s[1:, :-1] & s[1:, 1:])
        if blocks.size == 0:
            return
        removed = False
        for by, bx in blocks:
            corners = ((by, bx), (by, bx + 1), (by + 1, bx), (by + 1, bx + 1))
            if not all(skel[cy, cx] for cy, cx in corners):
                continue  # already broken by an earlier removal
            for cy, cx in corners:
                if _removal_keeps_connectivity(skel, cy, cx):
                    skel[cy, cx] = 0
                    removed = True
                    break
        if not removed:
            return


_RING_OFFSETS = (
    (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1),
)


def _ring_transitions(skel: np.ndarray, y: int, x: int) -> int:
    # 0-to-1 transitions around the 8-neighbourhood; == 1 means removing
    # the pixel cannot split its local neighbourhood.
    h, w = skel.shape
    ring = []
    for dy, dx in _RING_OFFSETS:
        yy, xx = y + dy, x + dx
        ring.append(1 if 0 <= yy < h and 0 <= xx < w and skel[yy, xx] else 0)
    return sum(1 for a, b in zip(ring, ring[1:] + ring[:1]) if a == 0 and b == 1)


def _removal_keeps_connectivity(skel: np.ndarray, y: int, x: int) -> bool:
    if _ring_transitions(skel, y, x) == 1:
        return True  # locally simple, no walk needed
    h, w = skel.shape
    targets = set()
    for dy, dx in _RING_OFFSETS:
        yy, xx = y + dy, x + dx
        if 0 <= yy < h and 0 <= xx < w and skel[yy, xx]:
            targets.add((yy, xx))
    if len(targets) <= 1:
        return True
    skel[y, x] = 0
    try:
        start = next(iter(targets))
        seen = {start}
        stack = [start]
        pending = set(targets)
        pending.discard(start)
        while stack and pending:
            cy, cx = stack.pop()
            for dy, dx in _RING_OFFSETS:
                yy, xx = cy + dy, cx + dx
                if 0 <= yy < h and 0 <= xx < w and skel[yy, xx] \
                        and (yy, xx) not in seen:
                    seen.add((yy, xx))
                    pending.discard((yy, xx))
                    stack.append((yy, xx))
        return not pending
    finally:
        skel[y, x] = 1


def _neighbor_counts(skel_bool: np.ndarray) -> np.ndarray:
    padded = np.pad(skel_bool, 1)
    counts = np.zeros(skel_bool.shape, dtype=np.uint8)
    for view in (
        padded[:-2, 1:-1], padded[:-2, 2:], padded[1:-1, 2:], padded[2:, 2:],
        padded[2:, 1:-1], padded[2:, :-2], padded[1:-1, :-2], padded[:-2, :-2],
    ):
        counts += view
    return counts


def extract_keypoints(skel: np.ndarray) -> np.ndarray:
    """Endpoints and junctions of a unit-width skeleton, (x, y) pairs.

    A skeleton pixel with at most one skeleton neighbour is an endpoint
    (isolated pixels included); one with three or more is a junction.
    Output is ordered by (y, x) ascending. Skeletons made only of closed
    loops have neither, so every LOOP_SAMPLE_STRIDE-th pixel in scan
    order stands in.
    """
    skel_bool = skel != 0
    if not skel_bool.any():
        return np.zeros((0, 2), dtype=np.int32)
    counts = _neighbor_counts(skel_bool)
    key = skel_bool & ((counts <= 1) | (counts >= 3))
    pts_yx = np.argwhere(key)
    if pts_yx.shape[0] == 0:
        pts_yx = np.argwhere(skel_bool)[::LOOP_SAMPLE_STRIDE]
    return np.ascontiguousarray(pts_yx[:, ::-1]).astype(np.int32)


def centroid(mask: np.ndarray) -> tuple[float, float] | None:
    """Mean (x, y) position of the set pixels; None for an empty mask."""
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return None
    return float(xs.mean()), float(ys.mean())


def extract_features(mask: np.ndarray, layer_index: int = 0) -> SkeletonFeatures:
    """Thin a layer mask and collect its skeleton, keypoints, and centroid.

    The centroid is computed on the full layer mask, not the skeleton.
    """
    mask = np.ascontiguousarray(mask != 0).astype(np.uint8)
    height, width = mask.shape
    skel = thin(mask)
    pts_yx = np.argwhere(skel != 0)
    if pts_yx.shape[0] == 0:
        return _empty_features(layer_index, width, height)
    return SkeletonFeatures(
        layer_index=layer_index,
        width=width,
        height=height,
        skeleton_xy=np.ascontiguousarray(pts_yx[:, ::-1]).astype(np.int32),
        keypoints_xy=extract_keypoints(skel),
        centroid=centroid(mask),
    )
