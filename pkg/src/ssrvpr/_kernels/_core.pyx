# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: border-tracking thinning and log-polar binning.

Semantics match ssrvpr._kernels._fallback exactly; see that module for the
reference formulation. The thinning here only re-examines pixels whose
neighbourhood changed, which keeps the cost near O(foreground area)
instead of O(area * blob radius).
"""

from libc.math cimport atan2, floor, sqrt

import numpy as np


cdef inline int _deletable(const unsigned char* img, Py_ssize_t idx,
                           Py_ssize_t stride, int phase) nogil:
    cdef unsigned char p2 = img[idx - stride]
    cdef unsigned char p3 = img[idx - stride + 1]
    cdef unsigned char p4 = img[idx + 1]
    cdef unsigned char p5 = img[idx + stride + 1]
    cdef unsigned char p6 = img[idx + stride]
    cdef unsigned char p7 = img[idx + stride - 1]
    cdef unsigned char p8 = img[idx - 1]
    cdef unsigned char p9 = img[idx - stride - 1]
    cdef int filled = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9
    if filled < 2 or filled > 6:
        return 0
    cdef int transitions = 0
    if p2 == 0 and p3 == 1:
        transitions += 1
    if p3 == 0 and p4 == 1:
        transitions += 1
    if p4 == 0 and p5 == 1:
        transitions += 1
    if p5 == 0 and p6 == 1:
        transitions += 1
    if p6 == 0 and p7 == 1:
        transitions += 1
    if p7 == 0 and p8 == 1:
        transitions += 1
    if p8 == 0 and p9 == 1:
        transitions += 1
    if p9 == 0 and p2 == 1:
        transitions += 1
    if transitions != 1:
        return 0
    if phase == 0:
        if p2 * p4 * p6 != 0 or p4 * p6 * p8 != 0:
            return 0
    else:
        if p2 * p4 * p8 != 0 or p2 * p6 * p8 != 0:
            return 0
    return 1


def thin(mask):
    """Two-subpass iterative thinning, batch deletion per subpass."""
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    out = np.zeros_like(mask)
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return out
    cdef Py_ssize_t y0 = int(ys.min())
    cdef Py_ssize_t y1 = int(ys.max()) + 1
    cdef Py_ssize_t x0 = int(xs.min())
    cdef Py_ssize_t x1 = int(xs.max()) + 1
    pad = np.zeros((y1 - y0 + 2, x1 - x0 + 2), dtype=np.uint8)
    pad[1:-1, 1:-1] = mask[y0:y1, x0:x1] != 0

    cdef unsigned char[:, ::1] img = pad
    cdef Py_ssize_t rows = pad.shape[0]
    cdef Py_ssize_t stride = pad.shape[1]
    cdef Py_ssize_t total = rows * stride
    cdef unsigned char* base = &img[0, 0]

    cand_arr = np.empty(total, dtype=np.intp)
    marks_arr = np.empty(total, dtype=np.intp)
    nxt_arr = np.empty(total, dtype=np.intp)
    flag_arr = np.zeros(total, dtype=np.uint8)
    cdef Py_ssize_t[::1] cand = cand_arr
    cdef Py_ssize_t[::1] marks = marks_arr
    cdef Py_ssize_t[::1] nxt = nxt_arr
    cdef unsigned char[::1] flag = flag_arr

    cdef Py_ssize_t offs[8]
    offs[0] = -stride - 1
    offs[1] = -stride
    offs[2] = -stride + 1
    offs[3] = -1
    offs[4] = 1
    offs[5] = stride - 1
    offs[6] = stride
    offs[7] = stride + 1

    cdef Py_ssize_t n_cand = 0, n_marks, n_next, i, j, idx, nb
    cdef int phase, has_bg, deleted_any

    with nogil:
        # Initial candidates: foreground pixels touching any background.
        for idx in range(stride + 1, total - stride - 1):
            if base[idx] == 0:
                continue
            has_bg = 0
            for j in range(8):
                if base[idx + offs[j]] == 0:
                    has_bg = 1
                    break
            if has_bg:
                cand[n_cand] = idx
                flag[idx] = 1
                n_cand += 1

        while True:
            deleted_any = 0
            n_next = 0
            for phase in range(2):
                n_marks = 0
                for i in range(n_cand):
                    idx = cand[i]
                    if base[idx] == 0:
                        continue
                    if _deletable(base, idx, stride, phase):
                        marks[n_marks] = idx
                        n_marks += 1
                for i in range(n_marks):
                    base[marks[i]] = 0
                if n_marks > 0:
                    deleted_any = 1
                    # Survivors with a changed neighbourhood must be
                    # re-examined: by the next subpass within this
                    # iteration, and again at the next iteration.
                    for i in range(n_marks):
                        idx = marks[i]
                        for j in range(8):
                            nb = idx + offs[j]
                            if base[nb] == 1 and flag[nb] == 0:
                                cand[n_cand] = nb
                                flag[nb] = 1
                                n_cand += 1
                        nxt[n_next] = idx
                        n_next += 1
            if not deleted_any:
                break
            # Next iteration only needs live neighbours of this
            # iteration's deletions; everything else is unchanged.
            for i in range(n_cand):
                flag[cand[i]] = 0
            n_cand = 0
            for i in range(n_next):
                idx = nxt[i]
                for j in range(8):
                    nb = idx + offs[j]
                    if base[nb] == 1 and flag[nb] == 0:
                        cand[n_cand] = nb
                        flag[nb] = 1
                        n_cand += 1

    out[y0:y1, x0:x1] = pad[1:-1, 1:-1]
    return out


def shape_context_bins(refs, cloud, boundaries, sectors):
    """Log-polar occupancy counts; see the fallback for bin geometry."""
    refs = np.ascontiguousarray(refs, dtype=np.float64)
    cloud = np.ascontiguousarray(cloud, dtype=np.float64)
    boundaries = np.ascontiguousarray(boundaries, dtype=np.float64)
    cdef Py_ssize_t n_refs = refs.shape[0]
    cdef Py_ssize_t rings = boundaries.shape[0]
    cdef int n_sectors = int(sectors)
    out = np.zeros((n_refs, n_sectors * rings), dtype=np.int64)
    cdef Py_ssize_t n_cloud = cloud.shape[0]
    if n_refs == 0 or n_cloud == 0:
        return out

    cdef double[:, ::1] r = refs
    cdef double[:, ::1] c = cloud
    cdef double[::1] b = boundaries
    cdef long long[:, ::1] o = out
    cdef double radius = b[rings - 1]
    cdef double two_pi = 6.283185307179586
    cdef double sector_width = two_pi / n_sectors
    cdef Py_ssize_t i, j, k, ring
    cdef double rx, ry, dx, dy, dist, theta
    cdef long long sector

    with nogil:
        for i in range(n_refs):
            rx = r[i, 0]
            ry = r[i, 1]
            for j in range(n_cloud):
                dx = c[j, 0] - rx
                dy = c[j, 1] - ry
                dist = sqrt(dx * dx + dy * dy)
                if dist <= 0.0 or dist > radius:
                    continue
                ring = rings - 1
                for k in range(rings):
                    if dist <= b[k]:
                        ring = k
                        break
                theta = atan2(dy, dx)
                if theta < 0.0:
                    theta += two_pi
                sector = <long long>floor(theta / sector_width)
                if sector >= n_sectors:
                    sector = 0
                o[i, sector * rings + ring] += 1
    return out
