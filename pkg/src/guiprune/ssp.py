"""Stratified, structure-aware pruning of current-frame tokens.

The budget ``floor(N * mu)`` is filled in three layers: the best-scoring
foreground tokens, the best-scoring background tokens at the reduced
rate ``mu * rho``, and an evenly strided sample of whatever is left so
the retained set still spans the screen.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ImportanceMap,
    PartitionMask,
    PruneSelection,
    Stratum,
    TokenGrid,
    exact_ratio,
    floor_product,
)
from .errors import ConfigError, EmptyBudget, GridMismatch, KTooLarge


@dataclass(frozen=True)
class StratumBudget:
    k_total: int
    k_fg: int
    k_bg: int
    k_res: int

    def __post_init__(self):
        if min(self.k_total, self.k_fg, self.k_bg, self.k_res) < 0:
            raise ValueError(f"negative stratum budget: {self}")
        if self.k_fg + self.k_bg + self.k_res != self.k_total:
            raise ValueError(f"stratum budgets do not add up: {self}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return self.k_total, self.k_fg, self.k_bg, self.k_res


def stratum_budgets(n_total: int, n_fg: int, mu, rho) -> StratumBudget:
    """Per-stratum token counts; all floors are taken on exact rationals."""
    if not 0 <= n_fg <= n_total:
        raise ConfigError(f"need 0 <= n_fg <= n_total, got n_fg={n_fg}, n_total={n_total}")
    for name, v in (("mu", mu), ("rho", rho)):
        if not 0 < exact_ratio(v) <= 1:
            raise ConfigError(f"{name} must lie in (0, 1], got {v!r}")
    k_total = floor_product(n_total, mu)
    k_fg = floor_product(n_fg, mu)
    k_bg = floor_product(n_total - n_fg, mu, rho)
    return StratumBudget(k_total, k_fg, k_bg, k_total - k_fg - k_bg)


def top_k(indices, scores, k: int) -> list[int]:
    """The ``k`` highest-scoring indices, returned in ascending order.

    Equal scores prefer the smaller token index, so the result depends
    only on the (score, index) pairs. ``scores`` is an ImportanceMap or a
    flat array indexed by token.
    """
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    if k < 0:
        raise ConfigError(f"k must be >= 0, got {k}")
    if k > idx.size:
        raise KTooLarge(f"k={k} exceeds {idx.size} candidates")
    if k == 0:
        return []
    s = scores.scores if isinstance(scores, ImportanceMap) else np.asarray(scores, dtype=np.float64)
    order = np.lexsort((idx, -s[idx]))
    return sorted(idx[order[:k]].tolist())


def uniform_grid_sample(remaining, k_res: int) -> list[int]:
    """Evenly strided pick of ``k_res`` items: ``remaining[floor(j*R/k_res)]``."""
    rem = np.asarray(remaining, dtype=np.int64).reshape(-1)
    n = rem.size
    if k_res < 0:
        raise ConfigError(f"k_res must be >= 0, got {k_res}")
    if k_res > n:
        raise KTooLarge(f"k_res={k_res} exceeds {n} remaining tokens")
    if k_res == 0:
        return []
    if np.any(rem[1:] <= rem[:-1]):
        raise ValueError("remaining tokens must be strictly ascending")
    pos = (np.arange(k_res, dtype=np.int64) * n) // k_res
    return rem[pos].tolist()


def _check_aligned(grid: TokenGrid, scores: ImportanceMap, partition: PartitionMask) -> None:
    if scores.scores.size != grid.n_tokens or partition.is_foreground.size != grid.n_tokens:
        raise GridMismatch("scores and partition must match the grid token count")
    if (scores.grid.rows, scores.grid.cols) != (grid.rows, grid.cols) or (
        partition.grid.rows,
        partition.grid.cols,
    ) != (grid.rows, grid.cols):
        raise GridMismatch("scores and partition must be laid out on the same grid")


def prune(
    grid: TokenGrid,
    scores: ImportanceMap,
    partition: PartitionMask,
    mu,
    rho,
    residual_sampler=None,
) -> PruneSelection:
    """Select ``floor(N * mu)`` tokens of the current frame.

    ``residual_sampler(remaining, k)`` replaces the strided fill; it exists
    for the random-sampling ablation and defaults to
    :func:`uniform_grid_sample`.
    """
    _check_aligned(grid, scores, partition)
    fg = partition.foreground_indices()
    bg = partition.background_indices()
    budget = stratum_budgets(grid.n_tokens, fg.size, mu, rho)
    if budget.k_total == 0:
        raise EmptyBudget(f"floor({grid.n_tokens} * {mu}) = 0 tokens")

    s_fg = top_k(fg, scores, budget.k_fg)
    s_bg = top_k(bg, scores, budget.k_bg)
    taken = np.zeros(grid.n_tokens, dtype=bool)
    taken[s_fg] = True
    taken[s_bg] = True
    remaining = np.flatnonzero(~taken)
    sampler = residual_sampler or uniform_grid_sample
    s_uni = sampler(remaining, budget.k_res)

    retained = (
        [(i, Stratum.FG) for i in s_fg]
        + [(i, Stratum.BG) for i in s_bg]
        + [(int(i), Stratum.UNI) for i in s_uni]
    )
    return PruneSelection(grid, tuple(retained), budget.k_total)
