"""Descriptor database: in-memory store plus the on-disk binary format.

File layout (all integers little-endian):

    offset  size  field
    0       4     magic "SSRV"
    4       4     uint32 format version (currently 1)
    8       4     uint32 K      merged layer count
    12      4     uint32 M      sectors per ring
    16      4     uint32 N      rings
    20      4     uint32 t      smoothing half-window applied to this
                                database (0 for query-role databases)
    24      4     uint32 frame count
    28      16    fingerprint   first 16 bytes of the SHA-256 of the
                                canonical build-parameter string
    44      ...   frame records, each:
                      uint32 frame_id
                      uint8  empty flag
                      K*M*N  float32 descriptor values

The fingerprint covers the category config, the refine settings (or
"off"), the shape-context geometry, and the configured smoothing window,
so databases built under different parameters refuse to match even when
their dimensions happen to agree.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .aggregate import GlobalDescriptor
from .preprocess import RefineConfig, RefineParams
from .segmap import CategoryConfig
from .shapectx import ShapeContextParams

MAGIC = b"SSRV"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIII16s")
_RECORD_HEAD = struct.Struct("<IB")


class DatabaseError(ValueError):
    """Unreadable, malformed, or inconsistent descriptor database."""


class FingerprintMismatchError(DatabaseError):
    """Descriptors built under different parameters cannot be compared."""


def params_fingerprint(
    categories: CategoryConfig,
    refine: RefineParams | RefineConfig | None,
    sc_params: ShapeContextParams,
    half_window: int,
) -> bytes:
    """16-byte digest of everything that shapes descriptor values."""
    merge_parts = [
        f"m{k}=" + ",".join(str(i) for i in sorted(ids))
        for k, ids in enumerate(categories.merges)
    ]
    ignored = ",".join(str(i) for i in sorted(categories.ignored))
    refine_sig = "off" if refine is None else refine.signature()
    canonical = "|".join(
        [
            f"cat:{categories.name}:K={categories.num_layers}",
            ":".join(merge_parts),
            f"ign={ignored}",
            f"refine:{refine_sig}",
            f"sc:{sc_params.signature()}",
            f"t={half_window}",
        ]
    )
    return hashlib.sha256(canonical.encode("utf-8")).digest()[:16]


class DescriptorDatabase:
    """Ordered reference descriptors with their build fingerprint.

    Frame order is acquisition order; temporal smoothing depends on it.
    Read-only once built, so concurrent queries are safe.
    """

    def __init__(
        self,
        descriptors: Sequence[GlobalDescriptor],
        fingerprint: bytes,
        num_layers: int,
        sectors: int,
        rings: int,
        smoothing_window: int = 0,
    ):
        expected = num_layers * sectors * rings
        for desc in descriptors:
            if len(desc) != expected:
                raise DatabaseError(
                    f"descriptor length {len(desc)} != K*M*N = {expected}"
                )
        if len(fingerprint) != 16:
            raise DatabaseError("fingerprint must be 16 bytes")
        self.descriptors = list(descriptors)
        self.fingerprint = bytes(fingerprint)
        self.num_layers = num_layers
        self.sectors = sectors
        self.rings = rings
        self.smoothing_window = smoothing_window
        self._matrix: np.ndarray | None = None
        self._row_norms: np.ndarray | None = None
        self._frame_ids: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.descriptors)

    @property
    def descriptor_length(self) -> int:
        return self.num_layers * self.sectors * self.rings

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.stack([d.values for d in self.descriptors])
        return self._matrix

    @property
    def row_norms(self) -> np.ndarray:
        if self._row_norms is None:
            self._row_norms = np.linalg.norm(self.matrix, axis=1)
        return self._row_norms

    @property
    def frame_ids(self) -> np.ndarray:
        if self._frame_ids is None:
            self._frame_ids = np.array(
                [d.frame_id for d in self.descriptors], dtype=np.int64
            )
        return self._frame_ids


def save_database(db: DescriptorDatabase, path: str | Path) -> None:
    """Write the binary database file described in the module docstring."""
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                MAGIC,
                VERSION,
                db.num_layers,
                db.sectors,
                db.rings,
                db.smoothing_window,
                len(db),
                db.fingerprint,
            )
        )
        for desc in db.descriptors:
            fh.write(_RECORD_HEAD.pack(desc.frame_id, 1 if desc.empty else 0))
            fh.write(np.ascontiguousarray(desc.values, dtype="<f4").tobytes())


def load_database(path: str | Path) -> DescriptorDatabase:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise DatabaseError(f"cannot read database {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise DatabaseError(f"{path}: truncated header")
    magic, version, k, m, n, t, count, fingerprint = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise DatabaseError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise DatabaseError(f"{path}: unsupported version {version}")
    length = k * m * n
    record_size = _RECORD_HEAD.size + 4 * length
    expected = _HEADER.size + count * record_size
    if len(blob) != expected:
        raise DatabaseError(
            f"{path}: size {len(blob)} != expected {expected} for {count} frames"
        )
    descriptors = []
    offset = _HEADER.size
    smoothed = t > 0
    for _ in range(count):
        frame_id, empty_flag = _RECORD_HEAD.unpack_from(blob, offset)
        offset += _RECORD_HEAD.size
        values = np.frombuffer(blob, dtype="<f4", count=length, offset=offset)
        offset += 4 * length
        descriptors.append(
            GlobalDescriptor(
                values.astype(np.float64),
                frame_id=frame_id,
                empty=bool(empty_flag),
                smoothed=smoothed,
            )
        )
    return DescriptorDatabase(
        descriptors,
        fingerprint=fingerprint,
        num_layers=k,
        sectors=m,
        rings=n,
        smoothing_window=t,
    )
