"""Writes a self-checking synthetic episode to disk.

The transcript is computed with the oracles in :mod:`guiprune.sim`, not
with the production selection code, so a ``prune run`` on the same files
can be checked against it.
"""
from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path

from . import files
from .errors import ConfigError
from .core import CompressionConfig, Stratum, exact_ratio, floor_product
from .sim import oracle_prune, oracle_quota, synth_episode, synth_importance
from .tar import fit_cells
from .vision import partition_frame

TRANSCRIPT = "transcript.json"


def write_synthetic_episode(seed: int, out_dir, config: CompressionConfig | None = None,
                            width: int = 336, height: int = 616) -> dict:
    cfg = config or CompressionConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ep = synth_episode(seed, cfg.history_len, width, height, cfg.cell_px)

    history_names = []
    for k, shot in enumerate(ep.history, start=1):
        name = f"history_{k}.png"
        files.save_png(shot.image, out / name)
        history_names.append(name)
    files.save_png(ep.current.image, out / "current.png")

    part = partition_frame(ep.current.image, cfg)
    scores = synth_importance(part.grid, seed)
    files.write_importance_csv(scores, out / "attention.csv")
    files.write_json(cfg.to_dict(), out / "config.json")

    T = len(ep.history)
    n_orig = ep.history[0].grid.n_tokens
    g = exact_ratio(cfg.gamma)
    weights = [Fraction(1)] if T == 1 else [g + (1 - g) * Fraction(T - k, T - 1) for k in range(1, T + 1)]
    budget = floor_product(T, n_orig, cfg.lam)
    quotas = oracle_quota(budget, weights)
    hg = ep.history[0].grid
    realized = []
    if max(quotas) > n_orig:
        raise ConfigError("fixture transcripts need quotas below the per-frame token count")
    for q in quotas:
        r, c = fit_cells(hg.rows, hg.cols, q, math.sqrt(q / n_orig))
        realized.append(r * c)

    sel = oracle_prune(part.grid, scores, part.mask, cfg.mu, cfg.rho)
    transcript = {
        "seed": seed,
        "config": cfg.to_dict(),
        "history": history_names,
        "current": "current.png",
        "attention": "attention.csv",
        "plan": {"budget_total": budget, "quotas": quotas, "realized_tokens": realized},
        "current_frame": {
            "n_tokens": part.grid.n_tokens,
            "n_foreground": part.mask.n_foreground,
            "k_total": sel.budget_total,
            "retained": {s.value: sel.stratum_indices(s) for s in Stratum},
        },
        "temporal_attention": list(ep.temporal_attention),
        "retained_total": sum(realized) + len(sel),
    }
    files.write_json(transcript, out / TRANSCRIPT)
    return transcript
