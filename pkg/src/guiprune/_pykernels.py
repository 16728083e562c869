"""Pure-Python/numpy versions of the pixel kernels.

Results are bit-identical to the compiled ``_kernels`` module; the test
suite checks both against each other.
"""
from collections import deque

import numpy as np

TAN_22_5 = 0.4142135623730951
TAN_67_5 = 2.414213562373095

_NEIGHBORS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


def resize_bilinear(src, out_h, out_w):
    """Half-pixel-centre bilinear resample of an (H, W, C) uint8 array."""
    src = np.ascontiguousarray(src, dtype=np.uint8)
    h, w, _ = src.shape

    def axis(n_out, n_in):
        s = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        s = np.maximum(s, 0.0)
        i0 = np.minimum(np.floor(s).astype(np.intp), n_in - 1)
        i1 = np.minimum(i0 + 1, n_in - 1)
        return i0, i1, s - i0

    y0, y1, fy = axis(out_h, h)
    x0, x1, fx = axis(out_w, w)
    f = src.astype(np.float64)
    fx = fx[None, :, None]
    fy = fy[:, None, None]
    a = f[y0][:, x0]
    b = f[y0][:, x1]
    c = f[y1][:, x0]
    d = f[y1][:, x1]
    top = a + (b - a) * fx
    bot = c + (d - c) * fx
    v = top + (bot - top) * fy
    return np.clip(np.floor(v + 0.5), 0, 255).astype(np.uint8)


def nonmax_suppression(mag, gx, gy):
    """Keep gradient magnitudes that peak along the gradient direction."""
    mag = np.asarray(mag, dtype=np.float64)
    h, w = mag.shape
    p = np.zeros((h + 2, w + 2), dtype=np.float64)
    p[1:-1, 1:-1] = mag

    def nb(dy, dx):
        return p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    ax = np.abs(gx)
    ay = np.abs(gy)
    horiz = ay <= ax * TAN_22_5
    vert = ~horiz & (ay > ax * TAN_67_5)
    same_sign = (gx * gy) > 0

    n1 = np.where(horiz, nb(0, -1), np.where(vert, nb(-1, 0), np.where(same_sign, nb(-1, -1), nb(-1, 1))))
    n2 = np.where(horiz, nb(0, 1), np.where(vert, nb(1, 0), np.where(same_sign, nb(1, 1), nb(1, -1))))
    keep = (mag > n1) & (mag >= n2) & (mag > 0)
    return np.where(keep, mag, 0.0)


def hysteresis(thin, lo, hi):
    """Pixels above ``lo`` that are 8-connected to a pixel above ``hi``."""
    thin = np.asarray(thin, dtype=np.float64)
    h, w = thin.shape
    cand = thin > lo
    out = np.zeros((h, w), dtype=np.uint8)
    ys, xs = np.nonzero(thin > hi)
    queue = deque(zip(ys.tolist(), xs.tolist()))
    for y, x in queue:
        out[y, x] = 1
    while queue:
        y, x = queue.popleft()
        for dy, dx in _NEIGHBORS_8:
            yy, xx = y + dy, x + dx
            if 0 <= yy < h and 0 <= xx < w and cand[yy, xx] and not out[yy, xx]:
                out[yy, xx] = 1
                queue.append((yy, xx))
    return out


def label_components(mask):
    """8-connected labelling; labels 1..n in raster order of first pixel."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    n = 0
    ys, xs = np.nonzero(mask)
    for y0, x0 in zip(ys.tolist(), xs.tolist()):
        if labels[y0, x0]:
            continue
        n += 1
        labels[y0, x0] = n
        stack = [(y0, x0)]
        while stack:
            y, x = stack.pop()
            for dy, dx in _NEIGHBORS_8:
                yy, xx = y + dy, x + dx
                if 0 <= yy < h and 0 <= xx < w and mask[yy, xx] and not labels[yy, xx]:
                    labels[yy, xx] = n
                    stack.append((yy, xx))
    return labels, n


def component_boxes(labels, n):
    """(n, 4) int array of end-exclusive boxes ``x0, y0, x1, y1`` per label."""
    labels = np.asarray(labels)
    boxes = np.empty((n, 4), dtype=np.int32)
    boxes[:, 0] = labels.shape[1]
    boxes[:, 1] = labels.shape[0]
    boxes[:, 2] = 0
    boxes[:, 3] = 0
    ys, xs = np.nonzero(labels)
    idx = labels[ys, xs] - 1
    np.minimum.at(boxes[:, 0], idx, xs)
    np.minimum.at(boxes[:, 1], idx, ys)
    np.maximum.at(boxes[:, 2], idx, xs + 1)
    np.maximum.at(boxes[:, 3], idx, ys + 1)
    return boxes
