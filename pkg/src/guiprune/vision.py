"""Image-space operations: resizing and the foreground/background split.

The partition pipeline is grayscale -> 5x5 Gaussian -> CLAHE -> Canny at
two threshold pairs (OR-merged) -> 3x3 closing -> connected-component
filter -> max-pool onto the token grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .core import CompressionConfig, PartitionMask, TokenGrid
from .errors import GridMismatch

LUMA = (0.299, 0.587, 0.114)


@dataclass(frozen=True, eq=False)
class RasterImage:
    """8-bit image, shape (H, W) for gray or (H, W, 3) for RGB."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data)
        if a.dtype != np.uint8:
            if np.issubdtype(a.dtype, np.floating) and not np.all(np.isfinite(a)):
                raise ValueError("pixel data must be finite")
            a = np.clip(np.floor(np.asarray(a, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)
        if a.ndim == 3 and a.shape[2] == 1:
            a = a[:, :, 0]
        if a.ndim not in (2, 3) or (a.ndim == 3 and a.shape[2] != 3):
            raise ValueError(f"expected (H, W) or (H, W, 3) pixels, got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        a = np.array(a, copy=True)
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def height_px(self) -> int:
        return self.data.shape[0]

    @property
    def width_px(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else self.data.shape[2]

    @property
    def dims(self) -> tuple[int, int]:
        return self.width_px, self.height_px


@dataclass(frozen=True, eq=False)
class BinaryMap:
    """One boolean per pixel, shape (H, W)."""

    data: np.ndarray

    def __post_init__(self):
        a = np.array(self.data, dtype=bool, copy=True)
        if a.ndim != 2:
            raise ValueError(f"binary map must be 2-D, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def height_px(self) -> int:
        return self.data.shape[0]

    @property
    def width_px(self) -> int:
        return self.data.shape[1]

    def count(self) -> int:
        return int(self.data.sum())


def resize_bilinear(img: RasterImage, target: tuple[int, int]) -> RasterImage:
    """Bilinear resample to ``target = (width, height)`` with half-pixel centres."""
    tw, th = int(target[0]), int(target[1])
    if tw < 1 or th < 1:
        raise ValueError(f"target dims must be >= 1, got {target}")
    src = img.data if img.data.ndim == 3 else img.data[:, :, None]
    out = kernels.resize_bilinear(np.ascontiguousarray(src), th, tw)
    return RasterImage(out if img.data.ndim == 3 else out[:, :, 0])


def to_gray(img: RasterImage) -> np.ndarray:
    if img.channels == 1:
        return img.data
    rgb = img.data.astype(np.float64)
    y = rgb[..., 0] * LUMA[0] + rgb[..., 1] * LUMA[1] + rgb[..., 2] * LUMA[2]
    return np.clip(np.floor(y + 0.5), 0, 255).astype(np.uint8)


def gaussian_kernel(size: int = 5, sigma: float = 1.0) -> np.ndarray:
    r = size // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _convolve_sep(a: np.ndarray, kx: np.ndarray, ky: np.ndarray) -> np.ndarray:
    # reflect-101 borders (edge pixel not repeated)
    rx, ry = len(kx) // 2, len(ky) // 2
    f = a.astype(np.float64)
    if f.shape[1] > rx:
        p = np.pad(f, ((0, 0), (rx, rx)), mode="reflect")
    else:
        p = np.pad(f, ((0, 0), (rx, rx)), mode="edge")
    f = sum(kx[i] * p[:, i : i + a.shape[1]] for i in range(len(kx)))
    if f.shape[0] > ry:
        p = np.pad(f, ((ry, ry), (0, 0)), mode="reflect")
    else:
        p = np.pad(f, ((ry, ry), (0, 0)), mode="edge")
    return sum(ky[i] * p[i : i + a.shape[0], :] for i in range(len(ky)))


def gaussian_blur(gray: np.ndarray, sigma: float = 1.0, size: int = 5) -> np.ndarray:
    k = gaussian_kernel(size, sigma)
    out = _convolve_sep(gray, k, k)
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def _clip_histogram(hist: np.ndarray, limit: int) -> np.ndarray:
    excess = int(np.maximum(hist - limit, 0).sum())
    hist = np.minimum(hist, limit)
    batch, residual = divmod(excess, 256)
    hist = hist + batch
    if residual:
        step = max(256 // residual, 1)
        for i in range(0, 256, step):
            if residual == 0:
                break
            hist[i] += 1
            residual -= 1
    return hist


def clahe(gray: np.ndarray, clip_limit: float = 2.0, tiles: tuple[int, int] = (8, 8)) -> np.ndarray:
    """Contrast-limited adaptive histogram equalisation of a uint8 image.

    ``tiles`` is (rows, cols). Per-tile clipped-histogram mappings are
    blended bilinearly between tile centres.
    """
    gray = np.asarray(gray, dtype=np.uint8)
    h, w = gray.shape
    ty, tx = min(tiles[0], h), min(tiles[1], w)
    ph, pw = -h % ty, -w % tx
    src = gray
    if ph or pw:
        mode = "reflect" if (h > ph and w > pw) else "symmetric"
        src = np.pad(gray, ((0, ph), (0, pw)), mode=mode)
    th, tw = src.shape[0] // ty, src.shape[1] // tx
    area = th * tw
    limit = max(int(clip_limit * area / 256), 1)
    scale = 255.0 / area

    luts = np.empty((ty, tx, 256), dtype=np.float64)
    for i in range(ty):
        for j in range(tx):
            tile = src[i * th : (i + 1) * th, j * tw : (j + 1) * tw]
            hist = _clip_histogram(np.bincount(tile.ravel(), minlength=256), limit)
            luts[i, j] = np.clip(np.floor(np.cumsum(hist) * scale + 0.5), 0, 255)

    def coords(n, t, nt):
        f = np.arange(n, dtype=np.float64) / t - 0.5
        i1 = np.floor(f).astype(np.intp)
        a = f - i1
        return np.maximum(i1, 0), np.minimum(i1 + 1, nt - 1), a

    y1, y2, ya = coords(h, th, ty)
    x1, x2, xa = coords(w, tw, tx)
    Y1, X1 = np.meshgrid(y1, x1, indexing="ij")
    Y2, X2 = np.meshgrid(y2, x2, indexing="ij")
    v = gray
    top = luts[Y1, X1, v] * (1 - xa)[None, :] + luts[Y1, X2, v] * xa[None, :]
    bot = luts[Y2, X1, v] * (1 - xa)[None, :] + luts[Y2, X2, v] * xa[None, :]
    out = top * (1 - ya)[:, None] + bot * ya[:, None]
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def preprocess_gray(img: RasterImage, config: CompressionConfig | None = None) -> RasterImage:
    """Grayscale, 5x5 Gaussian smoothing, then CLAHE."""
    cfg = config or CompressionConfig()
    g = gaussian_blur(to_gray(img), cfg.gaussian_sigma)
    return RasterImage(clahe(g, cfg.clahe_clip, cfg.clahe_tiles))


_SOBEL_D = np.array([-1.0, 0.0, 1.0])
_SOBEL_S = np.array([1.0, 2.0, 1.0])


def sobel(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gx = _convolve_sep(gray, _SOBEL_D, _SOBEL_S)
    gy = _convolve_sep(gray, _SOBEL_S, _SOBEL_D)
    return gx, gy


def canny_levels(gray: np.ndarray, pairs) -> list[np.ndarray]:
    """Canny edge maps (uint8 0/1) for each ``(lo, hi)`` pair.

    Thresholds apply to the L2 Sobel magnitude. Gradient and non-maximum
    suppression are shared across pairs; only hysteresis differs.
    """
    gx, gy = sobel(gray)
    mag = np.hypot(gx, gy)
    thin = kernels.nonmax_suppression(mag, gx, gy)
    return [kernels.hysteresis(thin, float(lo), float(hi)) for lo, hi in pairs]


def dilate3(a: np.ndarray) -> np.ndarray:
    p = np.pad(a, 1, constant_values=False)
    h, w = a.shape
    out = np.zeros_like(a)
    for dy in range(3):
        for dx in range(3):
            out |= p[dy : dy + h, dx : dx + w]
    return out


def erode3(a: np.ndarray) -> np.ndarray:
    p = np.pad(a, 1, constant_values=True)
    h, w = a.shape
    out = np.ones_like(a)
    for dy in range(3):
        for dx in range(3):
            out &= p[dy : dy + h, dx : dx + w]
    return out


def close3(a: np.ndarray) -> np.ndarray:
    """Binary closing with a 3x3 square."""
    return erode3(dilate3(np.asarray(a, dtype=bool)))


def extract_edges(gray: RasterImage, config: CompressionConfig | None = None) -> BinaryMap:
    """OR of strict and lenient Canny maps, then a 3x3 closing."""
    cfg = config or CompressionConfig()
    if gray.channels != 1:
        raise ValueError("extract_edges expects a single-channel image")
    strict, lenient = canny_levels(gray.data, [cfg.canny_primary, cfg.canny_secondary])
    merged = (strict | lenient).astype(bool)
    return BinaryMap(close3(merged))


def filter_contours(edges: BinaryMap, min_area_px: int = 9, aspect_range=(0.05, 20.0)) -> BinaryMap:
    """Drop 8-connected components with a small or badly proportioned box.

    A component survives when its bounding-box area is at least
    ``min_area_px`` and its width/height ratio lies in ``aspect_range``.
    Survivors keep their own pixels (boxes are not filled).
    """
    mask = np.ascontiguousarray(edges.data, dtype=np.uint8)
    labels, n = kernels.label_components(mask)
    if n == 0:
        return BinaryMap(np.zeros_like(edges.data))
    boxes = np.asarray(kernels.component_boxes(labels, n), dtype=np.int64)
    bw = boxes[:, 2] - boxes[:, 0]
    bh = boxes[:, 3] - boxes[:, 1]
    aspect = bw / bh
    lo, hi = aspect_range
    keep = (bw * bh >= min_area_px) & (aspect >= lo) & (aspect <= hi)
    lut = np.concatenate([[False], keep])
    return BinaryMap(lut[labels])


def downsample_to_tokens(occupancy: BinaryMap, grid: TokenGrid) -> PartitionMask:
    """A token is foreground when any pixel of its cell is set."""
    ew, eh = grid.pixel_extent
    if occupancy.width_px < ew or occupancy.height_px < eh:
        raise GridMismatch(
            f"occupancy map {occupancy.width_px}x{occupancy.height_px} "
            f"does not cover the {ew}x{eh} grid extent"
        )
    s = grid.cell_px
    cells = occupancy.data[:eh, :ew].reshape(grid.rows, s, grid.cols, s)
    return PartitionMask(grid, cells.any(axis=(1, 3)).reshape(-1))


@dataclass(frozen=True, eq=False)
class PartitionResult:
    grid: TokenGrid
    gray: RasterImage
    edges: BinaryMap
    occupancy: BinaryMap
    mask: PartitionMask


def partition_frame(img: RasterImage, config: CompressionConfig | None = None) -> PartitionResult:
    """Full edge pipeline for one frame, keeping the intermediates."""
    cfg = config or CompressionConfig()
    grid = TokenGrid.for_image(img.width_px, img.height_px, cfg.patch_px, cfg.merge_factor)
    gray = preprocess_gray(img, cfg)
    edges = extract_edges(gray, cfg)
    occ = filter_contours(edges, cfg.min_contour_area_px, cfg.aspect_ratio_range)
    return PartitionResult(grid, gray, edges, occ, downsample_to_tokens(occ, grid))
