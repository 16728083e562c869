"""Synthetic data and independent reference implementations.

Everything random here is driven by :class:`SplitMix64` so fixtures can
be regenerated bit-for-bit from a seed in any language. The ``oracle_*``
functions are deliberately naive and share no selection code with
:mod:`guiprune.ssp` / :mod:`guiprune.tar`; tests compare the two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import (
    ImportanceMap,
    PartitionMask,
    PruneSelection,
    Stratum,
    TokenGrid,
    exact_ratio,
)
from .errors import ConfigError, EmptyBudget, KTooLarge
from .vision import RasterImage

MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 (Steele, Lea & Flood 2014) with the standard constants."""

    GOLDEN = 0x9E3779B97F4A7C15
    MUL1 = 0xBF58476D1CE4E5B9
    MUL2 = 0x94D049BB133111EB

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + self.GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * self.MUL1) & MASK64
        z = ((z ^ (z >> 27)) * self.MUL2) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Float in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        threshold = ((1 << 64) - n) % n
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % n

    def between(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi], inclusive."""
        return lo + self.below(hi - lo + 1)


def derive_seed(seed: int, stream: int) -> int:
    """Independent child seed; mixes ``stream`` through one SplitMix64 step."""
    return SplitMix64((int(seed) ^ (stream * 0xD1B54A32D192ED03)) & MASK64).next_u64()


# --- temporal attention ----------------------------------------------------


def synth_temporal_attention(T: int, seed: int, decay: float = 1.0, noise: float = 0.2) -> list[float]:
    """Attention mass per history frame (lag 1 first), summing to 1.

    Masses follow ``exp(-decay * (k - 1))`` with multiplicative noise in
    ``[1 - noise, 1 + noise]``; the parameters must leave room for the
    noise so the sequence stays strictly decreasing.
    """
    if T < 1:
        raise ConfigError("T must be >= 1")
    if not (0 <= noise < 1) or (1 + noise) * math.exp(-decay) >= (1 - noise):
        raise ConfigError("noise too large for the decay rate to stay monotone")
    rng = SplitMix64(seed)
    raw = [math.exp(-decay * k) * (1 + noise * (2 * rng.uniform() - 1)) for k in range(T)]
    total = sum(raw)
    return [m / total for m in raw]


# --- synthetic screenshots -------------------------------------------------


@dataclass(frozen=True)
class PlantedElement:
    kind: str  # "button", "box", "stroke" or "text"
    cell_box: tuple[int, int, int, int]  # r0, c0, r1, c1 inclusive
    pixel_box: tuple[int, int, int, int]  # x0, y0, x1, y1 end-exclusive

    def fg_cells(self) -> list[tuple[int, int]]:
        """Cells the element's outline passes through."""
        r0, c0, r1, c1 = self.cell_box
        return [
            (r, c)
            for r in range(r0, r1 + 1)
            for c in range(c0, c1 + 1)
            if r in (r0, r1) or c in (c0, c1)
        ]


@dataclass(frozen=True, eq=False)
class SyntheticScreenshot:
    image: RasterImage
    grid: TokenGrid
    elements: tuple[PlantedElement, ...]
    seed: int

    def truth_mask(self) -> np.ndarray:
        """(rows, cols) boolean map of cells touched by planted outlines."""
        m = np.zeros((self.grid.rows, self.grid.cols), dtype=bool)
        for e in self.elements:
            for r, c in e.fg_cells():
                m[r, c] = True
        return m


def _gray_rgb(rng: SplitMix64, level: int) -> tuple[int, int, int]:
    return tuple(int(min(255, max(0, level + rng.between(-6, 6)))) for _ in range(3))


def synth_screenshot(
    seed: int,
    width: int = 336,
    height: int = 616,
    cell_px: int = 28,
    patch_px: int | None = None,
    n_elements: tuple[int, int] = (4, 9),
    margin_px: int = 6,
) -> SyntheticScreenshot:
    """A flat-background screen with buttons, outlined boxes and text strokes.

    Element outlines stay at least ``margin_px`` inside the cells they
    occupy, so the cells an outline touches are known exactly.
    """
    if patch_px is None:
        patch_px, merge = cell_px // 2, 2
        if patch_px * merge != cell_px:
            patch_px, merge = cell_px, 1
    else:
        merge = cell_px // patch_px
    grid = TokenGrid.for_image(width, height, patch_px, merge)
    rng = SplitMix64(seed)

    bg_level = rng.between(20, 235)
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:, :] = _gray_rgb(rng, bg_level)

    def contrast_level():
        if bg_level < 128:
            return rng.between(min(255, bg_level + 80), 255)
        return rng.between(0, max(0, bg_level - 80))

    lo_in, hi_in = margin_px, cell_px - margin_px  # usable pixel offsets within a cell
    occupied = np.zeros((grid.rows, grid.cols), dtype=bool)
    elements: list[PlantedElement] = []
    target = rng.between(*n_elements)
    attempts = 0
    while len(elements) < target and attempts < 200:
        attempts += 1
        kind = ("button", "box", "stroke", "text")[rng.below(4)]
        if kind in ("stroke", "text"):
            h_cells, w_cells = 1, rng.between(1, 2)
        else:
            h_cells, w_cells = rng.between(1, 3), rng.between(1, 4)
        if h_cells > grid.rows or w_cells > grid.cols:
            continue
        r0 = rng.below(grid.rows - h_cells + 1)
        c0 = rng.below(grid.cols - w_cells + 1)
        r1, c1 = r0 + h_cells - 1, c0 + w_cells - 1
        ra, rb = max(r0 - 1, 0), min(r1 + 1, grid.rows - 1)
        ca, cb = max(c0 - 1, 0), min(c1 + 1, grid.cols - 1)
        if occupied[ra : rb + 1, ca : cb + 1].any():
            continue

        x0 = c0 * cell_px + rng.between(lo_in, hi_in - 10)
        x1 = c1 * cell_px + rng.between(lo_in + 10, hi_in)
        if x1 - x0 < 10:
            continue
        if kind in ("stroke", "text"):
            th = rng.between(2, 3) if kind == "stroke" else rng.between(7, 10)
            y0 = r0 * cell_px + rng.between(lo_in + 2, hi_in - th - 2)
            y1 = y0 + th
        else:
            y0 = r0 * cell_px + rng.between(lo_in, hi_in - 10)
            y1 = r1 * cell_px + rng.between(lo_in + 10, hi_in)
            if y1 - y0 < 10:
                continue

        color = _gray_rgb(rng, contrast_level())
        if kind == "button" or kind == "stroke":
            img[y0:y1, x0:x1] = color
        elif kind == "box":
            img[y0:y1, x0:x1] = color
            img[y0 + 2 : y1 - 2, x0 + 2 : x1 - 2] = img[0, 0]
        else:
            x = x0
            while x < x1:
                gw = min(rng.between(3, 6), x1 - x)
                img[y0:y1, x : x + gw] = color
                x += gw + rng.between(3, 4)
        occupied[r0 : r1 + 1, c0 : c1 + 1] = True
        elements.append(PlantedElement(kind, (r0, c0, r1, c1), (x0, y0, x1, y1)))

    return SyntheticScreenshot(RasterImage(img), grid, tuple(elements), seed)


def flat_image(width: int, height: int, level: int | tuple[int, int, int] = 128) -> RasterImage:
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:, :] = level
    return RasterImage(img)


def token_iou(pred: np.ndarray, truth: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    union = np.logical_or(pred, truth).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(pred, truth).sum() / union)


# --- synthetic importance --------------------------------------------------


def synth_importance(grid: TokenGrid, seed: int, partition: PartitionMask | None = None,
                     n_anchors: int = 3) -> ImportanceMap:
    """Stand-in for shallow-layer attention scores.

    A few Gaussian "anchor" bumps over low uniform noise, plus a bonus on
    foreground tokens when a partition is given. Values are rounded to six
    decimals so they survive a CSV round trip exactly.
    """
    rng = SplitMix64(seed)
    rows, cols = grid.rows, grid.cols
    rr, cc = np.mgrid[0:rows, 0:cols].astype(np.float64)
    scores = np.array([0.2 * rng.uniform() for _ in range(rows * cols)]).reshape(rows, cols)
    for _ in range(n_anchors):
        cy, cx = rng.uniform() * rows, rng.uniform() * cols
        sigma = 1.0 + 2.0 * rng.uniform()
        scores += np.exp(-((rr - cy) ** 2 + (cc - cx) ** 2) / (2 * sigma * sigma))
    if partition is not None:
        scores += 0.5 * partition.as_2d()
    return ImportanceMap(grid, np.round(scores.reshape(-1), 6))


# --- oracles ---------------------------------------------------------------


def oracle_quota(budget: int, weights) -> list[int]:
    """Largest-remainder apportionment on exact rationals.

    Hands out the leftover units one at a time to the largest remaining
    fractional part (smaller lag first on ties), then lifts zero quotas by
    taking from the largest quota (latest lag on ties).
    """
    w = [Fraction(x) for x in weights]
    total = sum(w, Fraction(0))
    exact = [Fraction(budget) * x / total for x in w]
    quotas = [q.numerator // q.denominator for q in exact]
    fracs = [e - q for e, q in zip(exact, quotas)]
    given = [False] * len(w)
    for _ in range(budget - sum(quotas)):
        best = None
        for k in range(len(w)):
            if given[k]:
                continue
            if best is None or fracs[k] > fracs[best]:
                best = k
        given[best] = True
        quotas[best] += 1
    while 0 in quotas:
        k = quotas.index(0)
        top = max(quotas)
        donor = len(quotas) - 1 - quotas[::-1].index(top)
        quotas[donor] -= 1
        quotas[k] = 1
    return quotas


def _floor_exact(*factors) -> int:
    acc = Fraction(1)
    for f in factors:
        acc *= exact_ratio(f)
    return acc.numerator // acc.denominator


def oracle_prune(grid: TokenGrid, scores: ImportanceMap, partition: PartitionMask, mu, rho) -> PruneSelection:
    """Literal, list-based transcription of the three-stratum selection."""
    n = grid.rows * grid.cols
    s = [float(x) for x in scores.scores]
    fg_flags = [bool(x) for x in partition.is_foreground]
    T_fg = [i for i in range(n) if fg_flags[i]]
    T_bg = [i for i in range(n) if not fg_flags[i]]

    K_total = _floor_exact(n, mu)
    if K_total == 0:
        raise EmptyBudget("zero-token budget")
    K_fg = _floor_exact(len(T_fg), mu)
    K_bg = _floor_exact(len(T_bg), mu, rho)

    def topk(cands, k):
        if k > len(cands):
            raise KTooLarge(k)
        ranked = sorted(cands, key=lambda i: (-s[i], i))
        return ranked[:k]

    S_fg = topk(T_fg, K_fg)
    S_bg = topk(T_bg, K_bg)
    K_res = K_total - (len(S_fg) + len(S_bg))
    chosen = set(S_fg) | set(S_bg)
    T_remain = [i for i in range(n) if i not in chosen]
    if K_res > len(T_remain):
        raise KTooLarge(K_res)
    S_uni = []
    for j in range(K_res):
        p = Fraction(j * len(T_remain), K_res)
        S_uni.append(T_remain[p.numerator // p.denominator])

    labelled = [(i, Stratum.FG) for i in S_fg] + [(i, Stratum.BG) for i in S_bg] + [
        (i, Stratum.UNI) for i in S_uni
    ]
    return PruneSelection(grid, tuple(labelled), K_total)


def random_sample_baseline(remaining, k: int, seed: int) -> list[int]:
    """Seeded uniform sample without replacement (partial Fisher-Yates)."""
    pool = [int(i) for i in remaining]
    if k < 0:
        raise ConfigError("k must be >= 0")
    if k > len(pool):
        raise KTooLarge(f"k={k} exceeds {len(pool)} items")
    rng = SplitMix64(seed)
    for i in range(k):
        j = i + rng.below(len(pool) - i)
        pool[i], pool[j] = pool[j], pool[i]
    return sorted(pool[:k])


@dataclass(frozen=True, eq=False)
class SyntheticEpisode:
    history: tuple[SyntheticScreenshot, ...]
    current: SyntheticScreenshot
    temporal_attention: tuple[float, ...]
    seed: int
    extra: dict = field(default_factory=dict)


def synth_episode(seed: int, history_len: int = 4, width: int = 336, height: int = 616,
                  cell_px: int = 28) -> SyntheticEpisode:
    history = tuple(
        synth_screenshot(derive_seed(seed, k), width, height, cell_px) for k in range(1, history_len + 1)
    )
    current = synth_screenshot(derive_seed(seed, 0), width, height, cell_px)
    attn = tuple(synth_temporal_attention(history_len, derive_seed(seed, 1000))) if history_len else ()
    return SyntheticEpisode(history, current, attn, seed)
