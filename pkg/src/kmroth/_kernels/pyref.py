"""Pure numpy reference implementations of the hot kernels.

Selected at import when the compiled extension is unavailable (or when
KM_PURE_PYTHON is set). Same contracts as ``_core``; roll-based, so costs are
O(|supp f| * |G|) per convolution instead of tight C loops.
"""

import numpy as np


def _nd(arr, orders):
    return np.asarray(arr).reshape(tuple(int(m) for m in orders))


def conv_int64(f, g, coords, orders, strides, corr):
    f = np.asarray(f, dtype=np.int64)
    g = np.asarray(g, dtype=np.int64)
    orders_t = tuple(int(m) for m in orders)
    axes = tuple(range(len(orders_t)))
    g_nd = _nd(g, orders_t)
    out = np.zeros(orders_t, dtype=np.int64)
    for y in np.flatnonzero(f):
        shift = tuple(int(c) for c in coords[y])
        if corr:
            shift = tuple(-s for s in shift)
        out += f[y] * np.roll(g_nd, shift, axis=axes)
    return out.reshape(-1)


def count_3aps_mask(mask, coords, orders, strides):
    orders_t = tuple(int(m) for m in orders)
    axes = tuple(range(len(orders_t)))
    a = _nd(np.asarray(mask, dtype=bool), orders_t)
    total = 0
    n = a.size
    for d in range(n):
        shift = tuple(-int(c) for c in coords[d])
        a1 = np.roll(a, shift, axis=axes)
        a2 = np.roll(a1, shift, axis=axes)
        total += int(np.count_nonzero(a & a1 & a2))
    return total
