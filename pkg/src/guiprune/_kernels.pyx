# cython: language_level=3
"""Compiled pixel kernels. Same contracts as guiprune._pykernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double TAN_22_5 = 0.4142135623730951
cdef double TAN_67_5 = 2.414213562373095


def resize_bilinear(const unsigned char[:, :, ::1] src, Py_ssize_t out_h, Py_ssize_t out_w):
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1], ch = src.shape[2]
    out = np.empty((out_h, out_w, ch), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] dst = out
    cdef double sy_scale = <double>h / <double>out_h
    cdef double sx_scale = <double>w / <double>out_w
    cdef Py_ssize_t y, x, k, y0, y1, x0, x1
    cdef double sy, sx, fy, fx, a, b, c, d, top, bot, v
    cdef Py_ssize_t *xs0 = <Py_ssize_t *>malloc(out_w * sizeof(Py_ssize_t))
    cdef Py_ssize_t *xs1 = <Py_ssize_t *>malloc(out_w * sizeof(Py_ssize_t))
    cdef double *fxs = <double *>malloc(out_w * sizeof(double))
    if xs0 == NULL or xs1 == NULL or fxs == NULL:
        free(xs0); free(xs1); free(fxs)
        raise MemoryError()
    try:
        for x in range(out_w):
            sx = (x + 0.5) * sx_scale - 0.5
            if sx < 0.0:
                sx = 0.0
            x0 = <Py_ssize_t>floor(sx)
            if x0 > w - 1:
                x0 = w - 1
            xs0[x] = x0
            xs1[x] = x0 + 1 if x0 + 1 < w else w - 1
            fxs[x] = sx - x0
        with nogil:
            for y in range(out_h):
                sy = (y + 0.5) * sy_scale - 0.5
                if sy < 0.0:
                    sy = 0.0
                y0 = <Py_ssize_t>floor(sy)
                if y0 > h - 1:
                    y0 = h - 1
                y1 = y0 + 1 if y0 + 1 < h else h - 1
                fy = sy - y0
                for x in range(out_w):
                    x0 = xs0[x]
                    x1 = xs1[x]
                    fx = fxs[x]
                    for k in range(ch):
                        a = src[y0, x0, k]
                        b = src[y0, x1, k]
                        c = src[y1, x0, k]
                        d = src[y1, x1, k]
                        top = a + (b - a) * fx
                        bot = c + (d - c) * fx
                        v = floor(top + (bot - top) * fy + 0.5)
                        if v < 0.0:
                            v = 0.0
                        elif v > 255.0:
                            v = 255.0
                        dst[y, x, k] = <unsigned char>v
    finally:
        free(xs0); free(xs1); free(fxs)
    return out


cdef inline double _at(const double[:, ::1] m, Py_ssize_t y, Py_ssize_t x,
                       Py_ssize_t h, Py_ssize_t w) noexcept nogil:
    if y < 0 or y >= h or x < 0 or x >= w:
        return 0.0
    return m[y, x]


def nonmax_suppression(mag_in, gx_in, gy_in):
    cdef const double[:, ::1] mag = np.ascontiguousarray(mag_in, dtype=np.float64)
    cdef const double[:, ::1] gx = np.ascontiguousarray(gx_in, dtype=np.float64)
    cdef const double[:, ::1] gy = np.ascontiguousarray(gy_in, dtype=np.float64)
    cdef Py_ssize_t h = mag.shape[0], w = mag.shape[1], y, x
    out = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] dst = out
    cdef double m, ax, ay, n1, n2
    with nogil:
        for y in range(h):
            for x in range(w):
                m = mag[y, x]
                if m <= 0.0:
                    continue
                ax = fabs(gx[y, x])
                ay = fabs(gy[y, x])
                if ay <= ax * TAN_22_5:
                    n1 = _at(mag, y, x - 1, h, w)
                    n2 = _at(mag, y, x + 1, h, w)
                elif ay > ax * TAN_67_5:
                    n1 = _at(mag, y - 1, x, h, w)
                    n2 = _at(mag, y + 1, x, h, w)
                elif gx[y, x] * gy[y, x] > 0.0:
                    n1 = _at(mag, y - 1, x - 1, h, w)
                    n2 = _at(mag, y + 1, x + 1, h, w)
                else:
                    n1 = _at(mag, y - 1, x + 1, h, w)
                    n2 = _at(mag, y + 1, x - 1, h, w)
                if m > n1 and m >= n2:
                    dst[y, x] = m
    return out


def hysteresis(thin_in, double lo, double hi):
    cdef const double[:, ::1] thin = np.ascontiguousarray(thin_in, dtype=np.float64)
    cdef Py_ssize_t h = thin.shape[0], w = thin.shape[1]
    out = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] dst = out
    cdef Py_ssize_t n = h * w, top = 0, y, x, yy, xx, p, dy, dx
    if n == 0:
        return out
    cdef Py_ssize_t *stack = <Py_ssize_t *>malloc(n * sizeof(Py_ssize_t))
    if stack == NULL:
        raise MemoryError()
    with nogil:
        for y in range(h):
            for x in range(w):
                if thin[y, x] > hi:
                    dst[y, x] = 1
                    stack[top] = y * w + x
                    top += 1
        while top > 0:
            top -= 1
            p = stack[top]
            y = p // w
            x = p - y * w
            for dy in range(-1, 2):
                yy = y + dy
                if yy < 0 or yy >= h:
                    continue
                for dx in range(-1, 2):
                    xx = x + dx
                    if xx < 0 or xx >= w or (dy == 0 and dx == 0):
                        continue
                    if dst[yy, xx] == 0 and thin[yy, xx] > lo:
                        dst[yy, xx] = 1
                        stack[top] = yy * w + xx
                        top += 1
    free(stack)
    return out


cdef inline Py_ssize_t _find(Py_ssize_t *parent, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t root = i, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


cdef inline void _union(Py_ssize_t *parent, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    a = _find(parent, a)
    b = _find(parent, b)
    if a < b:
        parent[b] = a
    elif b < a:
        parent[a] = b


def label_components(mask_in):
    cdef const unsigned char[:, ::1] mask = np.ascontiguousarray(mask_in, dtype=np.uint8)
    cdef Py_ssize_t h = mask.shape[0], w = mask.shape[1], y, x, p, q, r
    labels = np.zeros((h, w), dtype=np.int32)
    cdef int[:, ::1] lab = labels
    cdef Py_ssize_t n = h * w
    if n == 0:
        return labels, 0
    cdef Py_ssize_t *parent = <Py_ssize_t *>malloc(n * sizeof(Py_ssize_t))
    cdef int *remap = <int *>malloc(n * sizeof(int))
    if parent == NULL or remap == NULL:
        free(parent); free(remap)
        raise MemoryError()
    cdef int count = 0
    with nogil:
        # pass 1: link each pixel to its already-visited 8-neighbours
        for y in range(h):
            for x in range(w):
                p = y * w + x
                parent[p] = p
                remap[p] = 0
                if not mask[y, x]:
                    continue
                if x > 0 and mask[y, x - 1]:
                    _union(parent, p, p - 1)
                if y > 0:
                    if x > 0 and mask[y - 1, x - 1]:
                        _union(parent, p, p - w - 1)
                    if mask[y - 1, x]:
                        _union(parent, p, p - w)
                    if x + 1 < w and mask[y - 1, x + 1]:
                        _union(parent, p, p - w + 1)
        # pass 2: roots are the smallest raster index, so numbering in
        # raster order of roots matches first-pixel order
        for y in range(h):
            for x in range(w):
                if not mask[y, x]:
                    continue
                p = y * w + x
                r = _find(parent, p)
                if remap[r] == 0:
                    count += 1
                    remap[r] = count
                lab[y, x] = remap[r]
    free(parent)
    free(remap)
    return labels, count


def component_boxes(labels_in, Py_ssize_t n):
    cdef const int[:, ::1] lab = np.ascontiguousarray(labels_in, dtype=np.int32)
    cdef Py_ssize_t h = lab.shape[0], w = lab.shape[1], y, x
    cdef int l
    boxes = np.empty((n, 4), dtype=np.int32)
    cdef int[:, ::1] b = boxes
    for l in range(n):
        b[l, 0] = <int>w
        b[l, 1] = <int>h
        b[l, 2] = 0
        b[l, 3] = 0
    with nogil:
        for y in range(h):
            for x in range(w):
                l = lab[y, x] - 1
                if l < 0:
                    continue
                if x < b[l, 0]:
                    b[l, 0] = <int>x
                if y < b[l, 1]:
                    b[l, 1] = <int>y
                if x + 1 > b[l, 2]:
                    b[l, 2] = <int>(x + 1)
                if y + 1 > b[l, 3]:
                    b[l, 3] = <int>(y + 1)
    return boxes
