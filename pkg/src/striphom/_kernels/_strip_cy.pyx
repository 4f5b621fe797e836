# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of the strip-quadrature kernels (see fallback.py).

Same node ordering as the fallback (x-node major, ascending z, ascending
Gauss point); zero-width pieces produced by duplicate breakpoints are skipped
here instead of carrying zero weights, so node counts may differ while all
weighted sums agree to rounding.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()

cdef double _SQ35 = sqrt(0.6)
cdef double[3] GL3N
cdef double[3] GL3W
GL3N[0] = 0.5 * (1.0 - _SQ35); GL3N[1] = 0.5; GL3N[2] = 0.5 * (1.0 + _SQ35)
GL3W[0] = 5.0 / 18.0; GL3W[1] = 8.0 / 18.0; GL3W[2] = 5.0 / 18.0


def strip_nodes(int n, double eps, const double[::1] xq, const double[::1] wxq, const double[::1] gq):
    cdef Py_ssize_t nk = xq.shape[0]
    cdef Py_ssize_t k, b, q, cnt
    cdef int nb, i, j
    cdef double ymax, x0, v, key, lo, width, wk
    cdef double gmax = 0.0
    for k in range(nk):
        if gq[k] > gmax:
            gmax = gq[k]
    if eps * gmax >= 1.0:
        raise ValueError("strip leaves the unit square: eps*G >= 1")

    cdef int maxh = <int>floor(n * eps * gmax)
    cdef int maxbreaks = 2 * maxh + 8
    cdef double[::1] buf = np.empty(maxbreaks, dtype=float)
    cdef Py_ssize_t cap = nk * (maxbreaks - 1) * 3
    xs_arr = np.empty(cap, dtype=float)
    ys_arr = np.empty(cap, dtype=float)
    ws_arr = np.empty(cap, dtype=float)
    cdef double[::1] xs = xs_arr
    cdef double[::1] ys = ys_arr
    cdef double[::1] ws = ws_arr

    cnt = 0
    for k in range(nk):
        x0 = xq[k]
        ymax = eps * gq[k]
        wk = wxq[k] * gq[k]
        nb = 0
        buf[nb] = 0.0; nb += 1
        buf[nb] = 1.0; nb += 1
        # horizontal gridline crossings
        j = 1
        while j <= <int>floor(n * ymax):
            v = j / (n * ymax)
            if v < 1.0:
                buf[nb] = v; nb += 1
            j += 1
        # diagonal crossings y = x0 + m/n
        i = <int>floor(-x0 * n) + 1
        while x0 + (<double>i) / n < ymax:
            v = (x0 + (<double>i) / n) / ymax
            if 0.0 < v < 1.0:
                buf[nb] = v; nb += 1
            i += 1
        # insertion sort (nb is small)
        for b in range(1, nb):
            key = buf[b]
            j = b - 1
            while j >= 0 and buf[j] > key:
                buf[j + 1] = buf[j]
                j -= 1
            buf[j + 1] = key
        for b in range(nb - 1):
            lo = buf[b]
            width = buf[b + 1] - lo
            if width <= 0.0:
                continue
            for q in range(3):
                xs[cnt] = x0
                ys[cnt] = ymax * (lo + width * GL3N[q])
                ws[cnt] = wk * width * GL3W[q]
                cnt += 1
    return xs_arr[:cnt].copy(), ys_arr[:cnt].copy(), ws_arr[:cnt].copy()


def p1_tri_bary(int n, const double[::1] xs, const double[::1] ys):
    cdef Py_ssize_t npts = xs.shape[0]
    verts_arr = np.empty((npts, 3), dtype=np.int64)
    bary_arr = np.empty((npts, 3), dtype=float)
    cdef long long[:, ::1] verts = verts_arr
    cdef double[:, ::1] bary = bary_arr
    cdef Py_ssize_t k
    cdef long long i, j, v00, m = n + 1
    cdef double gx, gy, xi, eta
    for k in range(npts):
        gx = xs[k] * n
        gy = ys[k] * n
        i = <long long>gx
        if i > n - 1: i = n - 1
        if i < 0: i = 0
        j = <long long>gy
        if j > n - 1: j = n - 1
        if j < 0: j = 0
        xi = gx - i
        eta = gy - j
        v00 = j * m + i
        verts[k, 0] = v00
        if eta <= xi:
            verts[k, 1] = v00 + 1
            verts[k, 2] = v00 + m + 1
            bary[k, 0] = 1.0 - xi
            bary[k, 1] = xi - eta
            bary[k, 2] = eta
        else:
            verts[k, 1] = v00 + m + 1
            verts[k, 2] = v00 + m
            bary[k, 0] = 1.0 - eta
            bary[k, 1] = xi
            bary[k, 2] = eta - xi
    return verts_arr, bary_arr


def p1_eval(int n, const double[::1] coeffs, const double[::1] xs, const double[::1] ys):
    cdef Py_ssize_t npts = xs.shape[0]
    out_arr = np.empty(npts, dtype=float)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k
    cdef long long i, j, v00, m = n + 1
    cdef double gx, gy, xi, eta
    for k in range(npts):
        gx = xs[k] * n
        gy = ys[k] * n
        i = <long long>gx
        if i > n - 1: i = n - 1
        if i < 0: i = 0
        j = <long long>gy
        if j > n - 1: j = n - 1
        if j < 0: j = 0
        xi = gx - i
        eta = gy - j
        v00 = j * m + i
        if eta <= xi:
            out[k] = (coeffs[v00] * (1.0 - xi) + coeffs[v00 + 1] * (xi - eta)
                      + coeffs[v00 + m + 1] * eta)
        else:
            out[k] = (coeffs[v00] * (1.0 - eta) + coeffs[v00 + m + 1] * xi
                      + coeffs[v00 + m] * (eta - xi))
    return out_arr
