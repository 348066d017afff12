"""Independent brute-force oracles shared by the unit and acceptance tests.

These restate the documented math directly (per-point loops, rational
arithmetic for the metric sweep) and deliberately share no code with the
library paths they check.
"""

from __future__ import annotations

import math
from fractions import Fraction


def oracle_bins(ref, cloud, rings, sectors, radius):
    """Per-point log-polar bin assignment."""
    bins = [0] * (sectors * rings)
    bounds = [radius * 2.0 ** -(rings - 1 - j) for j in range(rings)]
    for qx, qy in cloud:
        dx = float(qx) - float(ref[0])
        dy = float(qy) - float(ref[1])
        dist = math.sqrt(dx * dx + dy * dy)
        if dist <= 0.0 or dist > radius:
            continue
        ring = next(j for j in range(rings) if dist <= bounds[j])
        theta = math.atan2(dy, dx)
        if theta < 0.0:
            theta += 2.0 * math.pi
        sector = int(math.floor(theta / (2.0 * math.pi / sectors)))
        if sector >= sectors:
            sector = 0
        bins[sector * rings + ring] += 1
    return bins


def oracle_metrics(rows, gt):
    """Single-best-match sweep in exact rational arithmetic.

    rows: (query_id, best_ref, score) triples. Returns the per-threshold
    tuples (threshold, precision, recall, tp, fp, fn, tn), the AUC, and
    Recall@100%Precision (both as Fractions).
    """
    thresholds = sorted({s for _, _, s in rows}, reverse=True)
    points = []
    for tau in thresholds:
        tp = fp = fn = tn = 0
        for q, best, s in rows:
            if s >= tau:
                if best in gt[q]:
                    tp += 1
                else:
                    fp += 1
            elif gt[q]:
                fn += 1
            else:
                tn += 1
        precision = Fraction(tp, tp + fp) if tp + fp else Fraction(1)
        recall = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        points.append((tau, precision, recall, tp, fp, fn, tn))
    ordered = sorted(points, key=lambda p: p[2])
    area = Fraction(0)
    prev_r, prev_p = Fraction(0), ordered[0][1]
    for _, p, r, *_ in ordered:
        area += (r - prev_r) * (p + prev_p) / 2
        prev_r, prev_p = r, p
    r100 = max((r for _, p, r, *_ in points if p == 1), default=Fraction(0))
    return points, area, 100 * r100
