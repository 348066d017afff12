"""Pure-numpy implementations of the hot kernels.

Selected when the compiled extension is unavailable or when
SSRVPR_PURE_PYTHON=1 is set. Both backends implement identical batch
semantics, so their outputs match bit for bit.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def thin(mask: np.ndarray) -> np.ndarray:
    """Two-subpass iterative thinning with simultaneous deletion per subpass.

    Pixels outside the image are treated as background. Returns a new
    uint8 mask; the input is not modified.
    """
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    out = np.zeros_like(mask)
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return out
    # Thinning only deletes, so the initial bounding box is enough.
    y0, y1 = int(ys.min()), int(ys.max()) + 1
    x0, x1 = int(xs.min()), int(xs.max()) + 1
    img = np.zeros((y1 - y0 + 2, x1 - x0 + 2), dtype=bool)
    img[1:-1, 1:-1] = mask[y0:y1, x0:x1] != 0
    while _subpass(img, 0) | _subpass(img, 1):
        pass
    out[y0:y1, x0:x1] = img[1:-1, 1:-1]
    return out


def _subpass(img: np.ndarray, phase: int) -> bool:
    center = img[1:-1, 1:-1]
    n = img[:-2, 1:-1]
    ne = img[:-2, 2:]
    e = img[1:-1, 2:]
    se = img[2:, 2:]
    s = img[2:, 1:-1]
    sw = img[2:, :-2]
    w = img[1:-1, :-2]
    nw = img[:-2, :-2]
    ring = (n, ne, e, se, s, sw, w, nw)
    filled = np.zeros(center.shape, dtype=np.uint8)
    for nb in ring:
        filled += nb
    transitions = np.zeros(center.shape, dtype=np.uint8)
    for cur, nxt in zip(ring, ring[1:] + ring[:1]):
        transitions += ~cur & nxt
    if phase == 0:
        gate = ~(n & e & s) & ~(e & s & w)
    else:
        gate = ~(n & e & w) & ~(n & s & w)
    marks = center & (filled >= 2) & (filled <= 6) & (transitions == 1) & gate
    if not marks.any():
        return False
    center[marks] = False
    return True


def shape_context_bins(
    refs: np.ndarray,
    cloud: np.ndarray,
    boundaries: np.ndarray,
    sectors: int,
) -> np.ndarray:
    """Log-polar occupancy counts of `cloud` around each reference point.

    `boundaries` holds the ring upper bounds in ascending order; its last
    entry is the outer radius. Cloud points at distance 0 or beyond the
    outer radius are skipped. Bin layout is sector-major:
    index = sector * rings + ring.
    """
    refs = np.ascontiguousarray(refs, dtype=np.float64)
    cloud = np.ascontiguousarray(cloud, dtype=np.float64)
    boundaries = np.ascontiguousarray(boundaries, dtype=np.float64)
    rings = boundaries.shape[0]
    radius = boundaries[-1]
    sector_width = TWO_PI / sectors
    out = np.zeros((refs.shape[0], sectors * rings), dtype=np.int64)
    if cloud.shape[0] == 0:
        return out
    cx = cloud[:, 0]
    cy = cloud[:, 1]
    for i in range(refs.shape[0]):
        dx = cx - refs[i, 0]
        dy = cy - refs[i, 1]
        dist = np.sqrt(dx * dx + dy * dy)
        keep = (dist > 0.0) & (dist <= radius)
        if not keep.any():
            continue
        ring = np.searchsorted(boundaries, dist[keep], side="left")
        theta = np.arctan2(dy[keep], dx[keep])
        theta = np.where(theta < 0.0, theta + TWO_PI, theta)
        sector = np.floor(theta / sector_width).astype(np.int64)
        # Guard the theta == 2*pi rounding case; that angle wraps to 0.
        sector[sector >= sectors] = 0
        out[i] = np.bincount(sector * rings + ring, minlength=sectors * rings)
    return out
