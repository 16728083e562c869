import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from guiprune.core import CompressionConfig, TokenGrid
from guiprune.errors import GridMismatch
from guiprune.sim import flat_image, synth_screenshot
from guiprune.vision import (
    BinaryMap,
    RasterImage,
    canny_levels,
    clahe,
    extract_edges,
    filter_contours,
    gaussian_blur,
    downsample_to_tokens,
    partition_frame,
    preprocess_gray,
    resize_bilinear,
    to_gray,
)


def _rect_image(w, h, box, bg=235, fg=40):
    a = np.full((h, w), bg, dtype=np.uint8)
    x0, y0, x1, y1 = box
    a[y0:y1, x0:x1] = fg
    return RasterImage(a)


def test_resize_identity_and_rgb_shape():
    img = RasterImage(np.random.default_rng(3).integers(0, 256, (30, 20, 3), dtype=np.uint8))
    assert np.array_equal(resize_bilinear(img, (20, 30)).data, img.data)
    out = resize_bilinear(img, (7, 9))
    assert out.dims == (7, 9) and out.channels == 3
    gray = RasterImage(img.data[:, :, 0].copy())
    assert resize_bilinear(gray, (5, 5)).channels == 1
    with pytest.raises(ValueError):
        resize_bilinear(img, (0, 4))


def test_luma_of_white_and_constant_preprocess():
    assert np.all(to_gray(flat_image(40, 30, (255, 255, 255))) == 255)
    out = preprocess_gray(flat_image(64, 48, 128))
    assert np.unique(out.data).size == 1


def test_blur_split_boundary():
    a = np.zeros((64, 64), dtype=np.uint8)
    a[:, 32:] = 255
    b = gaussian_blur(a, 1.0).astype(int)
    assert np.all((b[:, 31] > 0) & (b[:, 31] < 255))
    assert np.all((b[:, 32] > 0) & (b[:, 32] < 255))
    # away from the boundary the 5x5 kernel sees one side only
    assert np.all(b[:, :29] == 0) and np.all(b[:, 35:] == 255)
    # symmetric kernel: the two boundary columns mirror each other
    assert np.all(b[:, 31] + b[:, 32] == 255)


def test_blur_and_clahe_match_opencv():
    cv2 = pytest.importorskip("cv2")
    rng = np.random.default_rng(11)
    for h, w in [(64, 64), (616, 336), (100, 77)]:
        x = rng.integers(0, 256, (h, w), dtype=np.uint8)
        ref = cv2.GaussianBlur(x, (5, 5), 1.0, borderType=cv2.BORDER_REFLECT_101)
        assert np.abs(gaussian_blur(x).astype(int) - ref).max() <= 1
        smooth = cv2.GaussianBlur(x, (0, 0), 3)
        ref = cv2.createCLAHE(2.0, (8, 8)).apply(smooth)
        assert np.abs(clahe(smooth, 2.0, (8, 8)).astype(int) - ref).max() <= 1


def test_canny_matches_opencv():
    cv2 = pytest.importorskip("cv2")
    for seed in range(4):
        g = preprocess_gray(synth_screenshot(seed).image).data
        for lo, hi in [(50, 150), (30, 100)]:
            ours = canny_levels(g, [(lo, hi)])[0].astype(bool)
            ref = cv2.Canny(g, lo, hi, L2gradient=True) > 0
            assert (ours & ref).sum() / max((ours | ref).sum(), 1) >= 0.98


def test_edges_constant_image():
    assert not extract_edges(RasterImage(np.full((50, 60), 90, np.uint8))).data.any()


def test_edges_rectangle_band():
    box = (30, 20, 70, 45)  # x0, y0, x1, y1
    img = _rect_image(100, 70, box)
    edges = extract_edges(preprocess_gray(img)).data
    x0, y0, x1, y1 = box
    yy, xx = np.mgrid[0:70, 0:100]
    # distance (Chebyshev) from the boundary between inside and outside pixels
    inside = (xx >= x0) & (xx < x1) & (yy >= y0) & (yy < y1)
    d_out = np.maximum.reduce([x0 - xx, xx - (x1 - 1), y0 - yy, yy - (y1 - 1)])
    band = (d_out >= -2) & (d_out <= 2)
    assert edges.any()
    assert not edges[~band].any()
    assert not edges[inside & (d_out < -2)].any()
    # closed: flood fill from the image border cannot reach the interior
    ndimage = pytest.importorskip("scipy.ndimage")
    outside = ndimage.label(~edges)[0]
    assert outside[0, 0] != outside[(y0 + y1) // 2, (x0 + x1) // 2]


def test_or_merge_superset():
    g = preprocess_gray(synth_screenshot(4).image)
    merged = extract_edges(g).data
    for level in canny_levels(g.data, [(50, 150), (30, 100)]):
        assert not (level.astype(bool) & ~merged).any()


def test_filter_contours_examples():
    empty = BinaryMap(np.zeros((20, 50), bool))
    assert not filter_contours(empty).data.any()
    speck = np.zeros((20, 50), bool)
    speck[3, 4:6] = True
    assert not filter_contours(BinaryMap(speck), 9).data.any()
    m = np.zeros((60, 60), bool)
    m[2:7, 2:7] = True  # 5x5 block
    m[10, 10:50] = True  # 1 px tall, 40 px wide: aspect 40
    m[12:52, 55] = True  # 40 px tall, 1 px wide: aspect 1/40
    out = filter_contours(BinaryMap(m), 9, (0.05, 20)).data
    assert out[2:7, 2:7].all()
    assert out.sum() == 25


def test_filter_keeps_own_pixels():
    m = np.zeros((30, 30), bool)
    m[5, 5:15] = True
    m[5:15, 5] = True  # an L shape, box 10x10
    assert np.array_equal(filter_contours(BinaryMap(m)).data, m)


def test_downsample_examples():
    g = TokenGrid(3, 4, 14, 2)
    occ = np.zeros((84, 112), bool)
    assert downsample_to_tokens(BinaryMap(occ), g).n_foreground == 0
    occ[0, 0] = True
    assert list(downsample_to_tokens(BinaryMap(occ), g).foreground_indices()) == [0]
    with pytest.raises(GridMismatch):
        downsample_to_tokens(BinaryMap(np.zeros((80, 112), bool)), g)


def test_rectangle_tokens():
    # rectangle over pixel rows 40-80 and cols 40-120 on a 168x140 frame;
    # its edge band (+-3 px) touches cell rows 1-2 and cell cols 1-4 only
    img = _rect_image(168, 140, (40, 40, 121, 81))
    part = partition_frame(img, CompressionConfig())
    expect = np.zeros((5, 6), bool)
    expect[1:3, 1:5] = True
    assert np.array_equal(part.mask.as_2d(), expect)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), extra=st.integers(0, 2**31))
def test_maxpool_monotone(seed, extra):
    g = TokenGrid(4, 5, 7, 2)
    a = np.random.default_rng(seed).random((56, 70)) < 0.01
    b = a | (np.random.default_rng(extra).random((56, 70)) < 0.01)
    ma = downsample_to_tokens(BinaryMap(a), g).is_foreground
    mb = downsample_to_tokens(BinaryMap(b), g).is_foreground
    assert not (ma & ~mb).any()


@pytest.mark.parametrize("level", [0, 37, 128, 255, (10, 200, 90)])
def test_flat_frame_has_no_foreground(level):
    part = partition_frame(flat_image(336, 616, level))
    assert part.mask.n_foreground == 0
