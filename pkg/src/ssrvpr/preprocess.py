"""Binary-layer cleanup ahead of skeletonization.

All operations treat pixels outside the image as background and work on
uint8 0/1 masks; inputs are never modified in place.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .segmap import ConfigError, read_config_file


@dataclass(frozen=True)
class RefineParams:
    """Cleanup settings with absolute pixel-area thresholds."""

    close_kernel: int = 5
    open_kernel: int = 3
    max_hole_area: int = 0
    min_component_area: int = 0
    connectivity: int = 8

    def __post_init__(self) -> None:
        for side in (self.close_kernel, self.open_kernel):
            _check_kernel(side)
        if self.max_hole_area < 0 or self.min_component_area < 0:
            raise ValueError("area thresholds must be >= 0")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")

    def signature(self) -> str:
        return (
            f"close={self.close_kernel},open={self.open_kernel},"
            f"hole={self.max_hole_area},min={self.min_component_area},"
            f"conn={self.connectivity}"
        )


@dataclass(frozen=True)
class RefineConfig:
    """Config-file form of RefineParams; area thresholds may be relative.

    Relative thresholds (fractions of the image area) transfer across
    image sizes and are resolved per image via ``resolve``. An absolute
    value, when set, wins over the corresponding fraction.
    """

    close_kernel: int = 5
    open_kernel: int = 3
    connectivity: int = 8
    max_hole_area: int | None = None
    min_component_area: int | None = None
    max_hole_area_frac: float = 0.001
    min_component_area_frac: float = 0.002

    def resolve(self, width: int, height: int) -> RefineParams:
        area = width * height
        hole = self.max_hole_area
        if hole is None:
            hole = int(self.max_hole_area_frac * area)
        comp = self.min_component_area
        if comp is None:
            comp = int(self.min_component_area_frac * area)
        return RefineParams(
            close_kernel=self.close_kernel,
            open_kernel=self.open_kernel,
            max_hole_area=hole,
            min_component_area=comp,
            connectivity=self.connectivity,
        )

    def signature(self) -> str:
        hole = (
            f"hole={self.max_hole_area}"
            if self.max_hole_area is not None
            else f"hole_frac={self.max_hole_area_frac!r}"
        )
        comp = (
            f"min={self.min_component_area}"
            if self.min_component_area is not None
            else f"min_frac={self.min_component_area_frac!r}"
        )
        return (
            f"close={self.close_kernel},open={self.open_kernel},"
            f"{hole},{comp},conn={self.connectivity}"
        )


def load_refine_config(path: str | Path) -> RefineConfig:
    """Read the optional [refine] section of a pipeline config file."""
    sec = read_config_file(path)
    if not sec.has_section("refine"):
        return RefineConfig()
    ref = sec["refine"]
    kwargs = {}
    try:
        for key in ("close_kernel", "open_kernel", "connectivity",
                    "max_hole_area", "min_component_area"):
            if key in ref:
                kwargs[key] = int(ref[key])
        for key in ("max_hole_area_frac", "min_component_area_frac"):
            if key in ref:
                kwargs[key] = float(ref[key])
    except ValueError as exc:
        raise ConfigError(f"{path}: bad [refine] value: {exc}") from None
    try:
        return RefineConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _check_kernel(side: int) -> None:
    if side < 1 or side % 2 == 0:
        raise ValueError(f"kernel side must be odd and >= 1, got {side}")


def _as_mask(mask: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(mask != 0).astype(np.uint8)


def dilate(mask: np.ndarray, kernel: int) -> np.ndarray:
    """Binary dilation with a square structuring element."""
    _check_kernel(kernel)
    mask = _as_mask(mask)
    if kernel == 1:
        return mask
    element = np.ones((kernel, kernel), np.uint8)
    return cv2.dilate(mask, element, borderType=cv2.BORDER_CONSTANT, borderValue=0)


def erode(mask: np.ndarray, kernel: int) -> np.ndarray:
    """Binary erosion with a square structuring element."""
    _check_kernel(kernel)
    mask = _as_mask(mask)
    if kernel == 1:
        return mask
    element = np.ones((kernel, kernel), np.uint8)
    return cv2.erode(mask, element, borderType=cv2.BORDER_CONSTANT, borderValue=0)


def fill_holes(mask: np.ndarray, max_hole_area: int, connectivity: int = 8) -> np.ndarray:
    """Fill enclosed background regions of at most `max_hole_area` pixels.

    Background components that touch the image border are not holes and
    stay untouched.
    """
    mask = _as_mask(mask)
    height, width = mask.shape
    inverted = (mask == 0).astype(np.uint8)
    count, labels, stats, _ = cv2.connectedComponentsWithStats(
        inverted, connectivity=connectivity
    )
    fill = np.zeros(count, dtype=bool)
    for comp in range(1, count):
        x, y, w, h, area = stats[comp]
        touches_border = x == 0 or y == 0 or x + w == width or y + h == height
        if not touches_border and area <= max_hole_area:
            fill[comp] = True
    out = mask.copy()
    out[fill[labels]] = 1
    return out


def remove_small_components(
    mask: np.ndarray, min_component_area: int, connectivity: int = 8
) -> np.ndarray:
    """Drop foreground components strictly smaller than the threshold."""
    mask = _as_mask(mask)
    count, labels, stats, _ = cv2.connectedComponentsWithStats(
        mask, connectivity=connectivity
    )
    clear = stats[:, cv2.CC_STAT_AREA] < min_component_area
    clear[0] = False
    out = mask.copy()
    out[clear[labels]] = 0
    return out


def refine_layer(mask: np.ndarray, params: RefineParams) -> np.ndarray:
    """Full cleanup pass, in fixed order: close, open, fill, remove.

    Closing first bridges adjacent fragments, opening then strips
    speckle, hole filling and small-component removal finish the job.
    """
    out = erode(dilate(mask, params.close_kernel), params.close_kernel)
    out = dilate(erode(out, params.open_kernel), params.open_kernel)
    out = fill_holes(out, params.max_hole_area, params.connectivity)
    return remove_small_components(
        out, params.min_component_area, params.connectivity
    )
