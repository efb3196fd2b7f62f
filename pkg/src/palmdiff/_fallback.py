"""Pure numpy versions of the compiled kernels in ``_core.pyx``.

Same call signatures and results; selected when the extension is missing or
``PALMDIFF_PURE_PYTHON=1`` is set.
"""

import numpy as np

_CHUNK = 1 << 22


def fourier_sum(locs, weights, freqs, threads=1):
    nf = freqs.shape[0]
    out = np.zeros(nf, dtype=complex)
    if locs.shape[0] == 0 or nf == 0:
        return out.real.copy(), out.imag.copy()
    step = max(1, _CHUNK // max(locs.shape[0], 1))
    for s in range(0, nf, step):
        cyc = freqs[s:s + step] @ locs.T
        ph = -2.0 * np.pi * (cyc - np.rint(cyc))
        out[s:s + step] = np.exp(1j * ph) @ weights
    return out.real.copy(), out.imag.copy()


def fourier_sum_line(locs, weights, t0, dt, nt):
    p0 = locs @ t0
    pd = locs @ dt
    step = np.exp(-2j * np.pi * pd)
    out = np.zeros(nt, dtype=complex)
    z = None
    for j in range(nt):
        if j % 256 == 0:
            z = weights * np.exp(-2j * np.pi * (p0 + j * pd))
        out[j] = z.sum()
        z = z * step
    return out.real.copy(), out.imag.copy()


def pair_diffs_cells(src, dst, cutoff, src_cells, shape, strides, offsets,
                     order, cell_ids, cell_start, cell_count):
    d = src.shape[1]
    cut2 = cutoff * cutoff
    pieces = []
    block = 4096
    for b in range(0, src.shape[0], block):
        sc = src_cells[b:b + block]
        sp = src[b:b + block]
        for off in offsets:
            nb = sc + off
            valid = np.all((nb >= 0) & (nb < shape), axis=1)
            nid = nb @ strides
            pos = np.searchsorted(cell_ids, nid)
            pos_c = np.minimum(pos, len(cell_ids) - 1)
            found = valid & (pos < len(cell_ids)) & (cell_ids[pos_c] == nid)
            idx = np.nonzero(found)[0]
            if idx.size == 0:
                continue
            cnt = cell_count[pos_c[idx]]
            st = cell_start[pos_c[idx]]
            total = int(cnt.sum())
            rep_src = np.repeat(idx, cnt)
            within = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
            dst_idx = order[np.repeat(st, cnt) + within]
            diff = dst[dst_idx] - sp[rep_src]
            s = diff[:, 0] * diff[:, 0]
            for a in range(1, d):
                s = s + diff[:, a] * diff[:, a]
            pieces.append(diff[s <= cut2])
    if not pieces:
        return np.empty((0, d))
    return np.concatenate(pieces)
