"""Temporal-adaptive resolution for history frames.

A single token budget is shared by the whole history window and split
across frames with weights that fall linearly from 1 (most recent, lag 1)
to ``gamma`` (oldest, lag T). Each frame is then downscaled so its token
count fits its quota.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import CompressionConfig, TokenGrid, exact_ratio, floor_product
from .errors import BudgetTooSmall, ConfigError, QuotaExceedsOriginal


@dataclass(frozen=True)
class FramePlan:
    lag: int
    source_dims: tuple[int, int]
    n_orig: int
    weight: float
    quota_real: float
    quota_int: int
    scale: float
    target_dims: tuple[int, int]
    realized_tokens: int

    def to_dict(self) -> dict:
        return {
            "lag": self.lag,
            "source_dims": list(self.source_dims),
            "n_orig": self.n_orig,
            "weight": self.weight,
            "quota_real": self.quota_real,
            "quota_int": self.quota_int,
            "scale": self.scale,
            "target_dims": list(self.target_dims),
            "realized_tokens": self.realized_tokens,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FramePlan":
        d = dict(d)
        d["source_dims"] = tuple(d["source_dims"])
        d["target_dims"] = tuple(d["target_dims"])
        return cls(**d)


@dataclass(frozen=True)
class HistoryBudgetPlan:
    budget_total: int
    frames: tuple[FramePlan, ...]
    policy: str = "decay"

    @property
    def quotas(self) -> list[int]:
        return [f.quota_int for f in self.frames]

    @property
    def scales(self) -> list[float]:
        return [f.scale for f in self.frames]

    @property
    def realized_tokens(self) -> list[int]:
        return [f.realized_tokens for f in self.frames]

    @property
    def original_tokens(self) -> list[int]:
        return [f.n_orig for f in self.frames]

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "budget_total": self.budget_total,
            "frames": [f.to_dict() for f in self.frames],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HistoryBudgetPlan":
        return cls(
            budget_total=int(d["budget_total"]),
            frames=tuple(FramePlan.from_dict(f) for f in d["frames"]),
            policy=d.get("policy", "decay"),
        )


def compute_global_budget(T: int, n_orig: int, lam) -> int:
    """History token budget ``floor(T * n_orig * lam)``.

    Raises BudgetTooSmall when the budget cannot cover one token per frame.
    """
    if T < 1 or n_orig < 1:
        raise ConfigError(f"need T >= 1 and n_orig >= 1, got T={T}, n_orig={n_orig}")
    if not 0 < exact_ratio(lam) <= 1:
        raise ConfigError(f"lambda must lie in (0, 1], got {lam!r}")
    budget = floor_product(T, n_orig, lam)
    if budget < T:
        raise BudgetTooSmall(f"budget {budget} < {T} history frames")
    return budget


def decay_weights(T: int, gamma, exact: bool = False) -> list:
    """Linear decay from 1 at lag 1 down to ``gamma`` at lag T.

    With a single frame the formula is 0/0; that frame gets weight 1.
    ``exact=True`` returns Fractions (used internally for allocation).
    """
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    g = exact_ratio(gamma)
    if not 0 < g <= 1:
        raise ConfigError(f"gamma must lie in (0, 1], got {gamma!r}")
    if T == 1:
        w = [Fraction(1)]
    else:
        w = [g + (1 - g) * Fraction(T - k, T - 1) for k in range(1, T + 1)]
    return w if exact else [float(x) for x in w]


def uniform_weights(T: int) -> list[float]:
    """Equal weights; the "uniform allocation" history baseline."""
    return decay_weights(T, 1.0)


def real_quotas(budget: int, weights: Sequence) -> list[Fraction]:
    ws = [Fraction(w) for w in weights]
    total = sum(ws)
    return [budget * w / total for w in ws]


def allocate_quotas(budget: int, weights: Sequence) -> list[int]:
    """Integer quotas summing exactly to ``budget``.

    Largest-remainder rounding of ``budget * w_k / sum(w)``; equal
    remainders go to the smaller lag. A frame that rounds to zero takes one
    token from the largest quota (the latest such frame on ties), which
    keeps the quotas non-increasing when the weights are.
    """
    if not weights:
        raise ConfigError("need at least one weight")
    if any(not (w > 0) for w in weights):
        raise ConfigError("weights must be positive")
    if budget < len(weights):
        raise BudgetTooSmall(f"budget {budget} < {len(weights)} frames")

    shares = real_quotas(budget, weights)
    quotas = [math.floor(q) for q in shares]
    leftover = budget - sum(quotas)
    order = sorted(range(len(shares)), key=lambda k: (-(shares[k] - quotas[k]), k))
    for k in order[:leftover]:
        quotas[k] += 1

    for k in range(len(quotas)):
        if quotas[k] == 0:
            top = max(quotas)
            donor = max(j for j, q in enumerate(quotas) if q == top)
            quotas[donor] -= 1
            quotas[k] = 1
    return quotas


def scale_factor(quota: int, n_orig: int) -> float:
    """Side-length factor that turns ``n_orig`` tokens into ``quota``."""
    if quota < 1 or n_orig < 1:
        raise ConfigError(f"need quota >= 1 and n_orig >= 1, got {quota}, {n_orig}")
    if quota > n_orig:
        raise QuotaExceedsOriginal(f"quota {quota} > original {n_orig} tokens")
    return math.sqrt(quota / n_orig)


def fit_cells(rows: int, cols: int, quota: int, scale: float) -> tuple[int, int]:
    """Whole-cell target size close to ``scale`` with at most ``quota`` tokens.

    Tries floor/ceil of each scaled side and keeps the largest product that
    does not exceed the quota; ties prefer the aspect ratio nearest the
    source.
    """
    if quota >= rows * cols:
        return rows, cols
    sr, sc = scale * rows, scale * cols
    row_opts = {min(rows, max(1, math.floor(sr))), min(rows, max(1, math.ceil(sr))), 1}
    best = None
    for r in sorted(row_opts):
        col_opts = {math.floor(sc), math.ceil(sc), quota // r}
        for c in sorted(col_opts):
            c = min(cols, max(1, c))
            if r * c > quota:
                continue
            distortion = abs(math.log((c / r) / (cols / rows)))
            key = (-(r * c), distortion, r)
            if best is None or key < best[0]:
                best = (key, (r, c))
    return best[1]


def _capped_quotas(budget: int, weights: list[Fraction], caps: list[int]) -> list[int]:
    """Allocate, then pin frames whose quota exceeds their own token count
    and re-split what is left among the rest."""
    fixed: dict[int, int] = {}
    while True:
        free = [k for k in range(len(weights)) if k not in fixed]
        remaining = budget - sum(fixed.values())
        alloc = allocate_quotas(remaining, [weights[k] for k in free])
        over = [k for k, q in zip(free, alloc) if q > caps[k]]
        if not over:
            out = [0] * len(weights)
            for k, q in fixed.items():
                out[k] = q
            for k, q in zip(free, alloc):
                out[k] = q
            return out
        for k in over:
            fixed[k] = caps[k]


def plan_history(
    frame_dims: Sequence[tuple[int, int]],
    config: CompressionConfig,
    policy: str = "decay",
) -> HistoryBudgetPlan:
    """Quota, scale and patch-aligned target size for every history frame.

    ``frame_dims[0]`` is the most recent frame (lag 1). ``policy="uniform"``
    gives every frame the same weight (the equal-allocation baseline).
    Mixed resolutions are supported by weighting each frame's share by its
    own token count.
    """
    T = len(frame_dims)
    if T == 0:
        raise ConfigError("plan_history needs at least one frame")
    if policy not in ("decay", "uniform"):
        raise ConfigError(f"unknown history policy {policy!r}")

    grids = [TokenGrid.for_image(w, h, config.patch_px, config.merge_factor) for w, h in frame_dims]
    n_orig = [g.n_tokens for g in grids]
    uniform_res = len(set(n_orig)) == 1

    if uniform_res:
        budget = compute_global_budget(T, n_orig[0], config.lam)
    else:
        budget = floor_product(sum(n_orig), config.lam)
        if budget < T:
            raise BudgetTooSmall(f"budget {budget} < {T} history frames")

    gamma = 1 if policy == "uniform" else config.gamma
    weights = decay_weights(T, gamma, exact=True)
    effective = [w * n for w, n in zip(weights, n_orig)]
    shares = real_quotas(budget, effective)
    quotas = _capped_quotas(budget, effective, n_orig)

    frames = []
    for k, (grid, w, share, q) in enumerate(zip(grids, weights, shares, quotas), start=1):
        s = scale_factor(q, grid.n_tokens)
        r, c = fit_cells(grid.rows, grid.cols, q, s)
        frames.append(
            FramePlan(
                lag=k,
                source_dims=tuple(grid.origin_image_dims),
                n_orig=grid.n_tokens,
                weight=float(w),
                quota_real=float(share),
                quota_int=q,
                scale=s,
                target_dims=(c * grid.cell_px, r * grid.cell_px),
                realized_tokens=r * c,
            )
        )
    return HistoryBudgetPlan(budget_total=budget, frames=tuple(frames), policy=policy)
