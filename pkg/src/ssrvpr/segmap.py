"""Segmentation-map loading and splitting into merged category layers."""

from __future__ import annotations

import configparser
import logging
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

log = logging.getLogger(__name__)

# Lookup sentinel values for labels outside any merge group.
_IGNORED = -1
_UNKNOWN = -2


class ConfigError(ValueError):
    """Malformed or inconsistent configuration file."""


@dataclass(frozen=True)
class CategoryConfig:
    """Mapping from raw 8-bit label ids to merged category layers.

    Every raw id belongs to at most one merge group or to the ignored set
    (dynamic objects). Ids present in input data but absent from the
    config are treated as ignored and counted per image.
    """

    name: str
    merges: tuple[frozenset[int], ...]
    ignored: frozenset[int]
    _lut: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.merges) < 1:
            raise ConfigError("config needs at least one merge group")
        lut = np.full(256, _UNKNOWN, dtype=np.int16)
        owner: dict[int, str] = {}
        for k, ids in enumerate(self.merges):
            if not ids:
                raise ConfigError(f"merge group {k} is empty")
            for raw in ids:
                self._check_id(raw)
                if raw in owner:
                    raise ConfigError(
                        f"raw label {raw} in both {owner[raw]} and group {k}"
                    )
                owner[raw] = f"group {k}"
                lut[raw] = k
        for raw in self.ignored:
            self._check_id(raw)
            if raw in owner:
                raise ConfigError(
                    f"raw label {raw} in both {owner[raw]} and ignored set"
                )
            lut[raw] = _IGNORED
        object.__setattr__(self, "_lut", lut)

    @staticmethod
    def _check_id(raw: int) -> None:
        if not 0 <= raw <= 255:
            raise ConfigError(f"raw label {raw} outside the 8-bit range")

    @property
    def num_layers(self) -> int:
        return len(self.merges)


@dataclass(frozen=True, eq=False)
class SegmentationMap:
    """Per-pixel raw label grid; the only sensory input of the pipeline."""

    labels: np.ndarray
    frame_id: int = 0

    def __post_init__(self) -> None:
        labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if labels.ndim != 2:
            raise ValueError(f"label grid must be 2D, got shape {labels.shape}")
        if labels.shape[0] == 0 or labels.shape[1] == 0:
            raise ValueError("zero-sized segmentation map")
        object.__setattr__(self, "labels", labels)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True, eq=False)
class LayerStack:
    """Binary mask per merged category, plus skipped-pixel statistics."""

    layers: np.ndarray  # (K, H, W) uint8
    ignored_count: int
    unknown_count: int

    @property
    def num_layers(self) -> int:
        return self.layers.shape[0]

    @property
    def width(self) -> int:
        return self.layers.shape[2]

    @property
    def height(self) -> int:
        return self.layers.shape[1]


def _parse_id_list(text: str, where: str) -> list[int]:
    out = []
    for tok in text.replace(",", " ").split():
        try:
            out.append(int(tok))
        except ValueError:
            raise ConfigError(f"non-integer label id {tok!r} in {where}") from None
    return out


def read_config_file(path: str | Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return parser


def load_category_config(path: str | Path) -> CategoryConfig:
    """Load the [category] section of a pipeline config file.

    Expected keys: ``name``, ``K``, one ``merge.<k>`` id list per merged
    layer with k covering exactly 0..K-1, and an optional ``ignored`` id
    list for dynamic-object labels.
    """
    parser = read_config_file(path)
    if not parser.has_section("category"):
        raise ConfigError(f"{path}: missing [category] section")
    sec = parser["category"]
    name = sec.get("name", Path(path).stem)
    try:
        k_count = int(sec.get("k", ""))
    except ValueError:
        raise ConfigError(f"{path}: missing or non-integer K") from None
    if k_count < 1:
        raise ConfigError(f"{path}: K must be >= 1, got {k_count}")
    merge_keys = {
        key: val for key, val in sec.items() if key.startswith("merge.")
    }
    merges: list[frozenset[int]] = []
    for k in range(k_count):
        key = f"merge.{k}"
        if key not in merge_keys:
            raise ConfigError(f"{path}: missing {key} (layers must be 0..K-1)")
        merges.append(frozenset(_parse_id_list(merge_keys.pop(key), key)))
    if merge_keys:
        raise ConfigError(
            f"{path}: merge indices outside 0..K-1: {sorted(merge_keys)}"
        )
    ignored = frozenset(_parse_id_list(sec.get("ignored", ""), "ignored"))
    return CategoryConfig(name=name, merges=tuple(merges), ignored=ignored)


def load_segmentation_map(path: str | Path, frame_id: int = 0) -> SegmentationMap:
    """Read a single-channel 8-bit label image."""
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise IOError(f"cannot read label image {path}")
    if img.ndim != 2:
        raise ValueError(
            f"{path}: expected a single-channel label image, got shape {img.shape}"
        )
    if img.dtype != np.uint8:
        raise ValueError(f"{path}: expected 8-bit labels, got {img.dtype}")
    return SegmentationMap(labels=img, frame_id=frame_id)


def build_layers(seg_map: SegmentationMap, categories: CategoryConfig) -> LayerStack:
    """Split a label grid into one binary mask per merged category.

    Ignored and unknown labels land in no mask; unknown ids are counted
    and logged so silently dropped classes stay visible.
    """
    idx = categories._lut[seg_map.labels]
    k = categories.num_layers
    layers = np.zeros((k, seg_map.height, seg_map.width), dtype=np.uint8)
    for layer in range(k):
        layers[layer] = idx == layer
    ignored_count = int((idx == _IGNORED).sum())
    unknown_count = int((idx == _UNKNOWN).sum())
    if unknown_count:
        log.warning(
            "frame %d: %d pixels with labels outside config %r treated as ignored",
            seg_map.frame_id,
            unknown_count,
            categories.name,
        )
    return LayerStack(
        layers=layers, ignored_count=ignored_count, unknown_count=unknown_count
    )
