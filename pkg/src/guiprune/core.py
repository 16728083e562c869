"""Shared domain types: configuration, the token grid and per-token data.

Token indices are row-major over the grid: ``i = r * cols + c``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, GridMismatch


def exact_ratio(x) -> Fraction:
    """Exact rational for a user-facing ratio.

    Floats are read through their shortest decimal repr so ``0.7`` means
    7/10; this keeps ``floor(300 * 0.7) == 210`` instead of 209.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(repr(float(x)))


def floor_product(*factors) -> int:
    """``floor`` of a product of counts and ratios, computed exactly."""
    acc = Fraction(1)
    for f in factors:
        acc *= exact_ratio(f)
    return math.floor(acc)


def _check_ratio(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and 0 < value <= 1):
        raise ConfigError(f"{name} must lie in (0, 1], got {value!r}")


def _check_positive_int(name: str, value) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class CostModelParams:
    """Model-scale constants for the analytic FLOPs estimates.

    Defaults describe a 2B-class GUI agent: a 32-layer, 1280-wide ViT
    encoder feeding a 28-layer, 1536-wide, 1.5B-parameter LLM.
    ``linear_coeff`` and ``quadratic_coeff`` weight the per-layer
    ``n*d^2`` (projections + MLP) and ``n^2*d`` (score + value matmuls)
    terms.
    """

    encoder_layers: int = 32
    encoder_hidden_dim: int = 1280
    llm_layers: int = 28
    llm_hidden_dim: int = 1536
    llm_params: float = 1.5e9
    linear_coeff: float = 4.0
    quadratic_coeff: float = 2.0

    def __post_init__(self):
        for name in ("encoder_layers", "encoder_hidden_dim", "llm_layers", "llm_hidden_dim"):
            _check_positive_int(name, getattr(self, name))
        if not (math.isfinite(self.llm_params) and self.llm_params > 0):
            raise ConfigError(f"llm_params must be positive, got {self.llm_params!r}")
        for name in ("linear_coeff", "quadratic_coeff"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be non-negative, got {v!r}")


@dataclass(frozen=True)
class CompressionConfig:
    """All hyperparameters of the compression pipeline.

    ``lam`` is the history retention ratio (serialized as ``"lambda"``),
    ``gamma`` the decay floor for the oldest frame, ``mu`` the current-frame
    retention ratio and ``rho`` the background saliency factor.
    """

    lam: float = 0.1
    gamma: float = 0.2
    mu: float = 0.75
    rho: float = 0.3
    history_len: int = 4
    patch_px: int = 14
    merge_factor: int = 2
    canny_primary: tuple[int, int] = (50, 150)
    canny_secondary: tuple[int, int] = (30, 100)
    gaussian_sigma: float = 1.0
    clahe_clip: float = 2.0
    clahe_tiles: tuple[int, int] = (8, 8)
    min_contour_area_px: int = 9
    aspect_ratio_range: tuple[float, float] = (0.05, 20.0)
    pruning_layer: int = 2
    cost_model: CostModelParams = field(default_factory=CostModelParams)

    def __post_init__(self):
        for name in ("lam", "gamma", "mu", "rho"):
            _check_ratio(name, getattr(self, name))
        for name in ("history_len", "patch_px", "merge_factor", "pruning_layer"):
            _check_positive_int(name, getattr(self, name))
        for name in ("canny_primary", "canny_secondary"):
            lo, hi = getattr(self, name)
            if not (0 <= lo < hi <= 255 * 8):
                raise ConfigError(f"{name} needs 0 <= lo < hi, got {(lo, hi)!r}")
            object.__setattr__(self, name, (lo, hi))
        if not (self.gaussian_sigma > 0):
            raise ConfigError("gaussian_sigma must be positive")
        if not (self.clahe_clip > 0):
            raise ConfigError("clahe_clip must be positive")
        ty, tx = self.clahe_tiles
        _check_positive_int("clahe_tiles[0]", ty)
        _check_positive_int("clahe_tiles[1]", tx)
        object.__setattr__(self, "clahe_tiles", (ty, tx))
        if self.min_contour_area_px < 0:
            raise ConfigError("min_contour_area_px must be >= 0")
        lo, hi = self.aspect_ratio_range
        if not (0 < lo <= hi):
            raise ConfigError(f"aspect_ratio_range needs 0 < lo <= hi, got {(lo, hi)!r}")
        object.__setattr__(self, "aspect_ratio_range", (float(lo), float(hi)))
        if isinstance(self.cost_model, dict):
            object.__setattr__(self, "cost_model", CostModelParams(**self.cost_model))

    @property
    def cell_px(self) -> int:
        return self.patch_px * self.merge_factor

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            key = "lambda" if f.name == "lam" else f.name
            v = getattr(self, f.name)
            if isinstance(v, CostModelParams):
                v = asdict(v)
            elif isinstance(v, tuple):
                v = list(v)
            d[key] = v
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "CompressionConfig":
        known = {("lambda" if f.name == "lam" else f.name): f.name for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if key == "cost_model":
                try:
                    value = CostModelParams(**value)
                except TypeError as exc:
                    raise ConfigError(f"cost_model: {exc}") from None
            elif isinstance(value, list):
                value = tuple(value)
            kwargs[known[key]] = value
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class TokenGrid:
    """Lattice of token cells laid over an image.

    One token covers a ``cell_px x cell_px`` block of pixels where
    ``cell_px = patch_px * merge_factor``. Partial cells at the right and
    bottom edges are dropped.
    """

    rows: int
    cols: int
    patch_px: int = 14
    merge_factor: int = 2
    origin_image_dims: tuple[int, int] | None = None

    def __post_init__(self):
        for name in ("rows", "cols", "patch_px", "merge_factor"):
            _check_positive_int(name, getattr(self, name))
        if self.origin_image_dims is None:
            object.__setattr__(
                self, "origin_image_dims", (self.cols * self.cell_px, self.rows * self.cell_px)
            )

    @classmethod
    def for_image(cls, width_px: int, height_px: int, patch_px: int = 14, merge_factor: int = 2):
        cell = patch_px * merge_factor
        rows, cols = height_px // cell, width_px // cell
        if rows < 1 or cols < 1:
            raise GridMismatch(
                f"image {width_px}x{height_px} is smaller than one {cell}px token cell"
            )
        return cls(rows, cols, patch_px, merge_factor, (int(width_px), int(height_px)))

    @property
    def cell_px(self) -> int:
        return self.patch_px * self.merge_factor

    @property
    def n_tokens(self) -> int:
        return self.rows * self.cols

    @property
    def pixel_extent(self) -> tuple[int, int]:
        """(width, height) in pixels actually covered by whole cells."""
        return self.cols * self.cell_px, self.rows * self.cell_px

    def coords_of(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.n_tokens:
            raise IndexError(index)
        return divmod(index, self.cols)

    def index_of(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError((row, col))
        return row * self.cols + col

    def cell_bounds(self, index: int) -> tuple[int, int, int, int]:
        """Pixel box ``(x0, y0, x1, y1)`` of a token, end-exclusive."""
        r, c = self.coords_of(index)
        s = self.cell_px
        return c * s, r * s, (c + 1) * s, (r + 1) * s


def token_count(grid: TokenGrid) -> int:
    return grid.rows * grid.cols


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ImportanceMap:
    """Non-negative saliency score per token, row-major."""

    grid: TokenGrid
    scores: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        if s.size != self.grid.n_tokens:
            raise GridMismatch(f"{s.size} scores for a grid of {self.grid.n_tokens} tokens")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ValueError("importance scores must be finite and >= 0")
        object.__setattr__(self, "scores", _frozen(s))

    def as_2d(self) -> np.ndarray:
        return self.scores.reshape(self.grid.rows, self.grid.cols)


@dataclass(frozen=True, eq=False)
class PartitionMask:
    """Foreground/background split of the grid's tokens."""

    grid: TokenGrid
    is_foreground: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.is_foreground, dtype=bool).reshape(-1)
        if m.size != self.grid.n_tokens:
            raise GridMismatch(f"{m.size} mask entries for a grid of {self.grid.n_tokens} tokens")
        object.__setattr__(self, "is_foreground", _frozen(m))

    @property
    def n_foreground(self) -> int:
        return int(self.is_foreground.sum())

    def foreground_indices(self) -> np.ndarray:
        return np.flatnonzero(self.is_foreground)

    def background_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.is_foreground)

    def as_2d(self) -> np.ndarray:
        return self.is_foreground.reshape(self.grid.rows, self.grid.cols)


class Stratum(str, enum.Enum):
    FG = "FG"
    BG = "BG"
    UNI = "UNI"


@dataclass(frozen=True)
class PruneSelection:
    """Retained tokens of one frame, each tagged with the stratum that kept it."""

    grid: TokenGrid
    retained: tuple[tuple[int, Stratum], ...]
    budget_total: int

    def __post_init__(self):
        items = tuple(sorted((int(i), Stratum(s)) for i, s in self.retained))
        idx = [i for i, _ in items]
        if len(set(idx)) != len(idx):
            raise ValueError("retained token indices must be unique")
        if idx and not (0 <= idx[0] and idx[-1] < self.grid.n_tokens):
            raise GridMismatch("retained index outside the grid")
        if len(items) != self.budget_total:
            raise ValueError(f"{len(items)} retained tokens but budget_total={self.budget_total}")
        object.__setattr__(self, "retained", items)

    @property
    def indices(self) -> list[int]:
        return [i for i, _ in self.retained]

    def stratum_indices(self, stratum: Stratum) -> list[int]:
        return [i for i, s in self.retained if s is stratum]

    def counts(self) -> dict[str, int]:
        out = {s.value: 0 for s in Stratum}
        for _, s in self.retained:
            out[s.value] += 1
        return out

    def __len__(self) -> int:
        return len(self.retained)


def label_grid(selection: PruneSelection) -> np.ndarray:
    """(rows, cols) array of stratum codes: '.' dropped, 'F', 'B', 'U'."""
    g = selection.grid
    out = np.full(g.n_tokens, ".", dtype="<U1")
    for i, s in selection.retained:
        out[i] = s.value[0]
    return out.reshape(g.rows, g.cols)


def as_index_array(indices: Iterable[int] | Sequence[int]) -> np.ndarray:
    return np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices, dtype=np.int64)
