# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Fourier sums over atoms and cell-list pair differences.

Semantics are identical to :mod:`palmdiff._fallback`; the test-suite checks
both against each other.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport cos, sin, rint, M_PI

cdef extern from "math.h" nogil:
    void sincos(double x, double *s, double *c)

cnp.import_array()


def fourier_sum(const double[:, ::1] locs, const double[::1] weights,
                const double[:, ::1] freqs, int threads=1):
    """Return Re/Im of sum_j w_j exp(-2 pi i <t, x_j>) for every row t."""
    cdef Py_ssize_t n = locs.shape[0], d = locs.shape[1], nf = freqs.shape[0]
    cdef Py_ssize_t f, j, a
    cdef double ph, re, im, w, sn, cs
    out_re = np.zeros(nf)
    out_im = np.zeros(nf)
    cdef double[::1] ore = out_re, oim = out_im
    for f in prange(nf, nogil=True, num_threads=max(threads, 1), schedule="static"):
        re = 0.0
        im = 0.0
        for j in range(n):
            ph = 0.0
            for a in range(d):
                ph = ph + freqs[f, a] * locs[j, a]
            ph = -2.0 * M_PI * (ph - rint(ph))
            w = weights[j]
            sincos(ph, &sn, &cs)
            re = re + w * cs
            im = im + w * sn
        ore[f] = re
        oim[f] = im
    return out_re, out_im


def fourier_sum_line(const double[:, ::1] locs, const double[::1] weights,
                     const double[::1] t0, const double[::1] dt, Py_ssize_t nt):
    """Fourier sum on the arithmetic frequency line t_j = t0 + j*dt.

    Keeps one phasor per atom and advances it by exp(-2 pi i <dt, x>) per
    frequency step; phasors are re-seeded exactly every 256 steps to bound
    drift. Atoms are processed in blocks of 256 so the state stays in cache.
    """
    cdef Py_ssize_t n = locs.shape[0], d = locs.shape[1]
    cdef Py_ssize_t i, j, a, b0, b1, m4
    cdef double tmp, r0, r1, r2, r3, q0, q1, q2, q3
    cdef double[::1] p0 = np.zeros(n), pd = np.zeros(n)
    cdef double[::1] sr = np.empty(n), si = np.empty(n), zr = np.empty(n), zi = np.empty(n)
    out_re = np.zeros(nt)
    out_im = np.zeros(nt)
    cdef double[::1] ore = out_re, oim = out_im
    with nogil:
        for i in range(n):
            for a in range(d):
                p0[i] = p0[i] + t0[a] * locs[i, a]
                pd[i] = pd[i] + dt[a] * locs[i, a]
            sr[i] = cos(-2.0 * M_PI * pd[i])
            si[i] = sin(-2.0 * M_PI * pd[i])
        b0 = 0
        while b0 < n:
            b1 = b0 + 256
            if b1 > n:
                b1 = n
            m4 = b0 + ((b1 - b0) // 4) * 4
            for j in range(nt):
                if j % 256 == 0:
                    for i in range(b0, b1):
                        zr[i] = weights[i] * cos(-2.0 * M_PI * (p0[i] + j * pd[i]))
                        zi[i] = weights[i] * sin(-2.0 * M_PI * (p0[i] + j * pd[i]))
                r0 = 0.0; r1 = 0.0; r2 = 0.0; r3 = 0.0
                q0 = 0.0; q1 = 0.0; q2 = 0.0; q3 = 0.0
                for i in range(b0, m4, 4):
                    r0 = r0 + zr[i]; q0 = q0 + zi[i]
                    r1 = r1 + zr[i + 1]; q1 = q1 + zi[i + 1]
                    r2 = r2 + zr[i + 2]; q2 = q2 + zi[i + 2]
                    r3 = r3 + zr[i + 3]; q3 = q3 + zi[i + 3]
                for i in range(m4, b1):
                    r0 = r0 + zr[i]; q0 = q0 + zi[i]
                ore[j] += (r0 + r1) + (r2 + r3)
                oim[j] += (q0 + q1) + (q2 + q3)
                for i in range(b0, b1):
                    tmp = zr[i] * sr[i] - zi[i] * si[i]
                    zi[i] = zr[i] * si[i] + zi[i] * sr[i]
                    zr[i] = tmp
            b0 = b1
    return out_re, out_im


cdef inline Py_ssize_t _find(const long long[::1] keys, long long key) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = keys.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    if lo < keys.shape[0] and keys[lo] == key:
        return lo
    return -1


def pair_diffs_cells(const double[:, ::1] src, const double[:, ::1] dst,
                     double cutoff,
                     const long long[:, ::1] src_cells,
                     const long long[::1] shape,
                     const long long[::1] strides,
                     const long long[:, ::1] offsets,
                     const long long[::1] order,
                     const long long[::1] cell_ids,
                     const long long[::1] cell_start,
                     const long long[::1] cell_count):
    """Differences dst_j - src_i with squared norm <= cutoff**2.

    ``order`` sorts ``dst`` by linear cell id; ``cell_ids``/``cell_start``/
    ``cell_count`` describe the occupied cells of that ordering.
    """
    cdef Py_ssize_t ns = src.shape[0], d = src.shape[1], no = offsets.shape[0]
    cdef Py_ssize_t i, o, a, p, c, jj
    cdef long long cid, cc
    cdef bint ok
    cdef double s, diff, cut2 = cutoff * cutoff
    cdef Py_ssize_t total = 0, k = 0

    # pass 1: count
    with nogil:
        for i in range(ns):
            for o in range(no):
                ok = True
                cid = 0
                for a in range(d):
                    cc = src_cells[i, a] + offsets[o, a]
                    if cc < 0 or cc >= shape[a]:
                        ok = False
                        break
                    cid = cid + cc * strides[a]
                if not ok:
                    continue
                c = _find(cell_ids, cid)
                if c < 0:
                    continue
                for p in range(cell_start[c], cell_start[c] + cell_count[c]):
                    jj = order[p]
                    s = 0.0
                    for a in range(d):
                        diff = dst[jj, a] - src[i, a]
                        s = s + diff * diff
                    if s <= cut2:
                        total += 1

    out = np.empty((total, d))
    cdef double[:, ::1] ov = out
    with nogil:
        for i in range(ns):
            for o in range(no):
                ok = True
                cid = 0
                for a in range(d):
                    cc = src_cells[i, a] + offsets[o, a]
                    if cc < 0 or cc >= shape[a]:
                        ok = False
                        break
                    cid = cid + cc * strides[a]
                if not ok:
                    continue
                c = _find(cell_ids, cid)
                if c < 0:
                    continue
                for p in range(cell_start[c], cell_start[c] + cell_count[c]):
                    jj = order[p]
                    s = 0.0
                    for a in range(d):
                        diff = dst[jj, a] - src[i, a]
                        s = s + diff * diff
                    if s <= cut2:
                        for a in range(d):
                            ov[k, a] = dst[jj, a] - src[i, a]
                        k += 1
    return out
