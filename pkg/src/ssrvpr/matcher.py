"""Query scoring and ranking against a reference database."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregate import GlobalDescriptor
from .database import DescriptorDatabase, FingerprintMismatchError


@dataclass(frozen=True, eq=False)
class MatchResult:
    """Full ranking of a query against the reference set.

    Ties in score rank the lower reference frame id first, so repeated
    matches are reproducible.
    """

    query_id: int
    ref_ids: np.ndarray  # (n,) int64, best first
    scores: np.ndarray  # (n,) float64, descending
    threshold: float
    accepted: bool

    @property
    def best(self) -> tuple[int, float]:
        return int(self.ref_ids[0]), float(self.scores[0])

    def top(self, n: int) -> list[tuple[int, float]]:
        return [
            (int(r), float(s))
            for r, s in zip(self.ref_ids[:n], self.scores[:n])
        ]


def similarity(a: GlobalDescriptor, b: GlobalDescriptor) -> float:
    """Cosine similarity; zero descriptors never match anything."""
    va, vb = a.values, b.values
    if va.shape != vb.shape:
        raise ValueError(f"descriptor lengths differ: {va.shape} vs {vb.shape}")
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (norm_a * norm_b))


def match_query(
    query: GlobalDescriptor, db: DescriptorDatabase, threshold: float
) -> MatchResult:
    """Score the query against every reference and rank the results.

    One exhaustive linear pass; the fixed descriptor length keeps the
    per-pair cost constant regardless of scene content.
    """
    if len(db) == 0:
        raise ValueError("cannot match against an empty database")
    if query.values.shape[0] != db.descriptor_length:
        raise ValueError(
            f"query length {query.values.shape[0]} != database length "
            f"{db.descriptor_length}"
        )
    count = len(db)
    query_norm = float(np.linalg.norm(query.values))
    if query_norm == 0.0:
        scores = np.zeros(count)
    else:
        dots = db.matrix @ query.values
        denom = db.row_norms * query_norm
        safe = np.where(denom == 0.0, 1.0, denom)
        scores = np.where(db.row_norms == 0.0, 0.0, dots / safe)
    order = np.lexsort((db.frame_ids, -scores))
    ranked_scores = scores[order]
    return MatchResult(
        query_id=query.frame_id,
        ref_ids=db.frame_ids[order],
        scores=ranked_scores,
        threshold=threshold,
        accepted=bool(ranked_scores[0] >= threshold),
    )


def match_database(
    query_db: DescriptorDatabase, ref_db: DescriptorDatabase, threshold: float
) -> list[MatchResult]:
    """Match every query descriptor, refusing mismatched fingerprints."""
    if query_db.fingerprint != ref_db.fingerprint:
        raise FingerprintMismatchError(
            "query and reference databases were built with different "
            "parameters; re-encode one side"
        )
    return [match_query(q, ref_db, threshold) for q in query_db.descriptors]
