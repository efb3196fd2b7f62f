"""Kernel dispatch between the compiled core and the numpy fallback."""

import itertools
import os

import numpy as np

from . import _fallback

try:
    from . import _core
    HAVE_COMPILED = True
except ImportError:
    _core = None
    HAVE_COMPILED = False

if HAVE_COMPILED and os.environ.get("PALMDIFF_PURE_PYTHON", "") in ("", "0"):
    _backend, BACKEND = _core, "compiled"
else:
    _backend, BACKEND = _fallback, "python"

_MAX_CELLS = 2 ** 62


def _backend_module(backend):
    if backend is None:
        return _backend
    if backend == "python":
        return _fallback
    if backend == "compiled":
        if not HAVE_COMPILED:
            raise ImportError("compiled kernels are not built")
        return _core
    raise ValueError(f"unknown backend {backend!r}")


def _as2d(x):
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return x


def fourier_sum(locs, weights, freqs, threads=1, backend=None):
    """Complex sums ``sum_j w_j exp(-2 pi i <t, x_j>)`` for each row of ``freqs``."""
    locs = _as2d(locs)
    freqs = _as2d(freqs)
    weights = np.ascontiguousarray(weights, dtype=float)
    re, im = _backend_module(backend).fourier_sum(locs, weights, freqs, int(threads))
    return np.asarray(re) + 1j * np.asarray(im)


def fourier_sum_line(locs, weights, t0, dt, nt, backend=None):
    """Fourier sums on the frequencies ``t0 + j*dt``, ``j = 0..nt-1``."""
    locs = _as2d(locs)
    weights = np.ascontiguousarray(weights, dtype=float)
    t0 = np.ascontiguousarray(np.atleast_1d(t0), dtype=float)
    dt = np.ascontiguousarray(np.atleast_1d(dt), dtype=float)
    re, im = _backend_module(backend).fourier_sum_line(locs, weights, t0, dt, int(nt))
    return np.asarray(re) + 1j * np.asarray(im)


def pair_differences_raw(src, dst, cutoff, backend=None):
    """All vectors ``dst_j - src_i`` with Euclidean norm <= ``cutoff``.

    Cell-list search on a uniform grid of side >= cutoff, scanning the 3**d
    adjacent cells. Rows are returned in lexicographic order.
    """
    src = _as2d(src)
    dst = _as2d(dst)
    d = src.shape[1]
    if src.shape[0] == 0 or dst.shape[0] == 0:
        return np.empty((0, d))
    allpts = np.vstack([src, dst])
    origin = allpts.min(axis=0)
    extent = allpts.max(axis=0) - origin
    span = float(extent.max()) + 1.0
    side = span if not np.isfinite(cutoff) else max(float(cutoff), span / 2 ** (60 // d))
    shape = np.floor(extent / side).astype(np.int64) + 1
    while np.prod(shape.astype(float)) > _MAX_CELLS:
        side *= 2.0
        shape = np.floor(extent / side).astype(np.int64) + 1
    strides = np.ones(d, dtype=np.int64)
    for a in range(d - 2, -1, -1):
        strides[a] = strides[a + 1] * shape[a + 1]

    dcells = np.minimum(np.floor((dst - origin) / side).astype(np.int64), shape - 1)
    scells = np.minimum(np.floor((src - origin) / side).astype(np.int64), shape - 1)
    ids = dcells @ strides
    order = np.argsort(ids, kind="stable").astype(np.int64)
    cell_ids, cell_start, cell_count = np.unique(ids[order], return_index=True,
                                                 return_counts=True)
    offsets = np.array(list(itertools.product((-1, 0, 1), repeat=d)), dtype=np.int64)
    out = _backend_module(backend).pair_diffs_cells(
        src, dst, float(cutoff) if np.isfinite(cutoff) else np.inf,
        np.ascontiguousarray(scells), np.ascontiguousarray(shape),
        np.ascontiguousarray(strides), offsets, order,
        np.ascontiguousarray(cell_ids, dtype=np.int64),
        np.ascontiguousarray(cell_start, dtype=np.int64),
        np.ascontiguousarray(cell_count, dtype=np.int64))
    out = np.asarray(out).reshape(-1, d)
    return sort_rows(out)


def pair_differences_bruteforce(src, dst, cutoff):
    """O(n*m) reference for :func:`pair_differences_raw`."""
    src = _as2d(src)
    dst = _as2d(dst)
    d = src.shape[1]
    diff = (dst[None, :, :] - src[:, None, :]).reshape(-1, d)
    s = diff[:, 0] * diff[:, 0]
    for a in range(1, d):
        s = s + diff[:, a] * diff[:, a]
    return sort_rows(diff[s <= float(cutoff) ** 2])


def sort_rows(x):
    if x.shape[0] == 0:
        return x
    return x[np.lexsort(x.T[::-1])]
