# cython: language_level=3
"""Hot kernels: exact integer convolution/correlation and 3-AP counting.

All arrays are flat, indexed lexicographically over the coordinate tuples of
a product of cyclic groups (C order, last axis fastest). `coords` is the
precomputed (n, r) digit table of the group.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def conv_int64(cnp.int64_t[::1] f, cnp.int64_t[::1] g,
               cnp.int64_t[:, ::1] coords, cnp.int64_t[::1] orders,
               cnp.int64_t[::1] strides, bint corr):
    """Integer pair-count convolution.

    conv (corr=False):  out[y + w] += f[y] * g[w]   (so out[x] = sum_y f[y] g[x-y])
    corr (corr=True):   out[w - y] += f[y] * g[w]   (so out[x] = sum_y f[y] g[x+y])
    """
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t r = orders.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t y, w, j
    cdef cnp.int64_t fy, gw, z, d

    for y in range(n):
        fy = f[y]
        if fy == 0:
            continue
        for w in range(n):
            gw = g[w]
            if gw == 0:
                continue
            z = 0
            for j in range(r):
                if corr:
                    d = coords[w, j] - coords[y, j]
                    if d < 0:
                        d += orders[j]
                else:
                    d = coords[y, j] + coords[w, j]
                    if d >= orders[j]:
                        d -= orders[j]
                z += d * strides[j]
            out[z] += fy * gw
    return out_arr


def count_3aps_mask(cnp.uint8_t[::1] mask, cnp.int64_t[:, ::1] coords,
                    cnp.int64_t[::1] orders, cnp.int64_t[::1] strides):
    """Number of ordered pairs (x, d) with x, x+d, x+2d all in the mask."""
    cdef Py_ssize_t n = mask.shape[0]
    cdef Py_ssize_t r = orders.shape[0]
    cdef Py_ssize_t x, d, j
    cdef cnp.int64_t total = 0
    cdef cnp.int64_t z1, z2, c

    for x in range(n):
        if not mask[x]:
            continue
        for d in range(n):
            z1 = 0
            z2 = 0
            for j in range(r):
                c = coords[x, j] + coords[d, j]
                if c >= orders[j]:
                    c -= orders[j]
                z1 += c * strides[j]
                c = c + coords[d, j]
                if c >= orders[j]:
                    c -= orders[j]
                z2 += c * strides[j]
            if mask[z1] and mask[z2]:
                total += 1
    return total
