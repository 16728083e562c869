"""End-to-end episode processing: plan and resize history, prune the current frame."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import files
from .accounting import EfficiencyReport, build_report
from .core import CompressionConfig, PruneSelection, Stratum, TokenGrid
from .errors import ConfigError
from .sim import synth_importance
from .ssp import prune, stratum_budgets
from .tar import HistoryBudgetPlan, plan_history
from .vision import PartitionResult, RasterImage, partition_frame, resize_bilinear

log = logging.getLogger(__name__)

REPORT_SCHEMA = "guiprune.report/1"


class MissingImportance(ConfigError):
    """No importance map was given and synthetic attention was not requested."""


@dataclass(frozen=True)
class EpisodeSpec:
    """Inputs for one decision step.

    ``history[0]`` is the most recent past frame (lag 1). An empty history
    runs current-frame pruning only.
    """

    history: tuple[str, ...]
    current: str
    config: CompressionConfig = field(default_factory=CompressionConfig)
    importance: str | None = None
    synthetic_attention: bool = False
    seed: int = 0
    output_tokens: int | None = None
    history_policy: str = "decay"

    def __post_init__(self):
        object.__setattr__(self, "history", tuple(str(p) for p in self.history))
        if self.history and len(self.history) != self.config.history_len:
            raise ConfigError(
                f"{len(self.history)} history frames given but history_len={self.config.history_len}"
            )


@dataclass(frozen=True, eq=False)
class EpisodeResult:
    plan: HistoryBudgetPlan | None
    selection: PruneSelection
    report: EfficiencyReport
    partition: PartitionResult
    resized_history: tuple[RasterImage, ...]
    current: RasterImage
    document: dict
    artifacts: dict = field(default_factory=dict)


def selection_to_dict(selection: PruneSelection, n_foreground: int, mu, rho) -> dict:
    g = selection.grid
    b = stratum_budgets(g.n_tokens, n_foreground, mu, rho)
    return {
        "grid": {
            "rows": g.rows,
            "cols": g.cols,
            "patch_px": g.patch_px,
            "merge_factor": g.merge_factor,
            "image_dims": list(g.origin_image_dims),
        },
        "budget": {"k_total": b.k_total, "k_fg": b.k_fg, "k_bg": b.k_bg, "k_res": b.k_res},
        "n_foreground": n_foreground,
        "retained": {s.value: selection.stratum_indices(s) for s in Stratum},
    }


def selection_from_dict(d: dict) -> PruneSelection:
    g = d["grid"]
    grid = TokenGrid(g["rows"], g["cols"], g["patch_px"], g["merge_factor"], tuple(g["image_dims"]))
    retained = [(i, Stratum(s)) for s, idx in d["retained"].items() for i in idx]
    return PruneSelection(grid, tuple(retained), d["budget"]["k_total"])


def episode_document(spec: EpisodeSpec, plan, selection, partition: PartitionResult, report) -> dict:
    """The report JSON; key order here is the published order."""
    cfg = spec.config
    return {
        "schema": REPORT_SCHEMA,
        "inputs": {
            "history": list(spec.history),
            "current": spec.current,
            "importance": spec.importance,
            "synthetic_attention": spec.importance is None and spec.synthetic_attention,
            "seed": spec.seed,
            "history_policy": spec.history_policy,
        },
        "plan": plan.to_dict() if plan is not None else None,
        "selection": selection_to_dict(selection, partition.mask.n_foreground, cfg.mu, cfg.rho),
        "efficiency": report.to_dict(),
    }


def run_episode(spec: EpisodeSpec, out_dir=None, report_only: bool = False) -> EpisodeResult:
    """Compress one episode and, if ``out_dir`` is given, write its artifacts.

    Artifacts: ``history_<lag>.png`` (resized frames), ``overlay.png``,
    ``token_mask.txt``, ``partition_mask.txt`` and ``report.json``. With
    ``report_only`` only ``report.json`` is written.
    """
    cfg = spec.config
    history_imgs = [files.load_image(p) for p in spec.history]
    current = files.load_image(spec.current)

    plan = None
    resized: list[RasterImage] = []
    if history_imgs:
        plan = plan_history([im.dims for im in history_imgs], cfg, policy=spec.history_policy)
        resized = [resize_bilinear(im, f.target_dims) for im, f in zip(history_imgs, plan.frames)]

    part = partition_frame(current, cfg)
    if spec.importance is not None:
        scores = files.align_importance(
            files.load_importance_csv(spec.importance, cfg.patch_px, cfg.merge_factor), part.grid
        )
    elif spec.synthetic_attention:
        log.warning("no importance map given; using synthetic attention (seed=%d)", spec.seed)
        scores = synth_importance(part.grid, spec.seed)
    else:
        raise MissingImportance("an importance map is required (pass --attention or --synthetic-attention)")

    selection = prune(part.grid, scores, part.mask, cfg.mu, cfg.rho)
    report = build_report(plan, selection, cfg, spec.output_tokens)
    doc = episode_document(spec, plan, selection, part, report)

    artifacts = {}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if not report_only:
            for f, im in zip(plan.frames if plan else (), resized):
                p = out / f"history_{f.lag}.png"
                files.save_png(im, p)
                artifacts[p.name] = p
            p = out / "overlay.png"
            files.save_png(files.render_overlay(current, selection), p)
            artifacts[p.name] = p
            p = out / "token_mask.txt"
            p.write_text(files.token_mask_text(selection), encoding="utf-8")
            artifacts[p.name] = p
            p = out / "partition_mask.txt"
            p.write_text(files.partition_mask_text(part.mask), encoding="utf-8")
            artifacts[p.name] = p
        p = out / "report.json"
        files.write_json(doc, p)
        artifacts[p.name] = p

    return EpisodeResult(plan, selection, report, part, tuple(resized), current, doc, artifacts)


def recompute_report(doc: dict, config: CompressionConfig | None = None,
                     output_tokens: int | None = None) -> dict:
    """Redo the accounting of a saved report, optionally with new cost constants."""
    if doc.get("schema") != REPORT_SCHEMA:
        raise ConfigError(f"not a {REPORT_SCHEMA} document")
    plan = HistoryBudgetPlan.from_dict(doc["plan"]) if doc.get("plan") else None
    selection = selection_from_dict(doc["selection"])
    cfg = config or CompressionConfig.from_dict(doc["efficiency"]["config"])
    return build_report(plan, selection, cfg, output_tokens).to_dict()
