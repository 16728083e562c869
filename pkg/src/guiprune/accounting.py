"""Analytic token and FLOPs accounting for a compressed episode.

The FLOPs model is deliberately simple: per layer ``c1*n*d^2`` for the
projections and MLP plus ``c2*n^2*d`` for attention, summed over layers.
Only ratios and monotonicity are meaningful; absolute values depend on
the counting convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .core import CompressionConfig, CostModelParams, PruneSelection
from .tar import HistoryBudgetPlan


def count_tokens(plan: HistoryBudgetPlan | None, selection: PruneSelection) -> tuple[int, int]:
    """LLM-visible visual tokens before and after compression.

    ``plan`` may be None (or empty) for an episode without history.
    """
    frames = plan.frames if plan is not None else ()
    before = sum(f.n_orig for f in frames) + selection.grid.n_tokens
    after = sum(f.realized_tokens for f in frames) + len(selection)
    return before, after


def _layer_flops(n: float, d: int, c1: float, c2: float) -> float:
    return c1 * n * d * d + c2 * n * n * d


def estimate_encoder_flops(per_frame_tokens: Sequence[int], params: CostModelParams) -> float:
    """Vision-encoder FLOPs; each frame attends only within itself."""
    d = params.encoder_hidden_dim
    return float(
        sum(
            params.encoder_layers * _layer_flops(n, d, params.linear_coeff, params.quadratic_coeff)
            for n in per_frame_tokens
        )
    )


def estimate_prefill_flops(total_tokens: int, params: CostModelParams) -> float:
    """LLM prefill FLOPs over one sequence of ``total_tokens``."""
    n = total_tokens
    d = params.llm_hidden_dim
    layers = params.llm_layers * _layer_flops(n, d, params.linear_coeff, params.quadratic_coeff)
    return float(layers + 2.0 * params.llm_params * n)


def estimate_decode_flops(context_tokens: int, output_tokens: int, params: CostModelParams) -> float:
    """Autoregressive decoding of ``output_tokens`` after a prefilled context.

    Each step costs ``2 * llm_params`` plus attention over the growing cache.
    """
    if output_tokens <= 0:
        return 0.0
    m = output_tokens
    cache_sum = m * context_tokens + m * (m - 1) / 2
    attn = params.llm_layers * params.quadratic_coeff * params.llm_hidden_dim * cache_sum
    return float(2.0 * params.llm_params * m + attn)


def _ratio(before: float, after: float) -> float | None:
    return before / after if after > 0 else None


@dataclass(frozen=True)
class EfficiencyReport:
    tokens_before: int
    tokens_after: int
    encoder_flops_before: float
    encoder_flops_after: float
    prefill_flops_before: float
    prefill_flops_after: float
    decode_flops_before: float | None
    decode_flops_after: float | None
    frames: tuple[dict, ...]
    config: dict
    metadata: dict = field(default_factory=dict)

    @property
    def token_ratio(self) -> float | None:
        return _ratio(self.tokens_before, self.tokens_after)

    @property
    def encoder_ratio(self) -> float | None:
        return _ratio(self.encoder_flops_before, self.encoder_flops_after)

    @property
    def prefill_ratio(self) -> float | None:
        return _ratio(self.prefill_flops_before, self.prefill_flops_after)

    @property
    def total_flops_before(self) -> float:
        return self.encoder_flops_before + self.prefill_flops_before + (self.decode_flops_before or 0.0)

    @property
    def total_flops_after(self) -> float:
        return self.encoder_flops_after + self.prefill_flops_after + (self.decode_flops_after or 0.0)

    def to_dict(self) -> dict:
        decode = None
        if self.decode_flops_before is not None:
            decode = {
                "before": self.decode_flops_before,
                "after": self.decode_flops_after,
                "reduction_ratio": _ratio(self.decode_flops_before, self.decode_flops_after),
            }
        return {
            "tokens": {
                "before": self.tokens_before,
                "after": self.tokens_after,
                "reduction_ratio": self.token_ratio,
            },
            "encoder_flops": {
                "before": self.encoder_flops_before,
                "after": self.encoder_flops_after,
                "reduction_ratio": self.encoder_ratio,
            },
            "prefill_flops": {
                "before": self.prefill_flops_before,
                "after": self.prefill_flops_after,
                "reduction_ratio": self.prefill_ratio,
            },
            "decode_flops": decode,
            "total_flops": {
                "before": self.total_flops_before,
                "after": self.total_flops_after,
                "reduction_ratio": _ratio(self.total_flops_before, self.total_flops_after),
            },
            "frames": [dict(f) for f in self.frames],
            "config": self.config,
            "metadata": self.metadata,
        }


def build_report(
    plan: HistoryBudgetPlan | None,
    selection: PruneSelection,
    config: CompressionConfig,
    output_tokens: int | None = None,
) -> EfficiencyReport:
    """Token counts and FLOPs estimates for one compressed episode.

    The encoder runs on unmerged patches (``merge_factor**2`` per token)
    and always sees the full current frame: in-LLM pruning happens after
    encoding, so only history downscaling saves encoder work.
    """
    params = config.cost_model
    m2 = config.merge_factor**2
    history = plan.frames if plan is not None else ()
    n_cur = selection.grid.n_tokens

    frames = [
        {
            "role": "history",
            "lag": f.lag,
            "tokens_before": f.n_orig,
            "tokens_after": f.realized_tokens,
        }
        for f in history
    ]
    frames.append({"role": "current", "lag": 0, "tokens_before": n_cur, "tokens_after": len(selection)})

    before, after = count_tokens(plan, selection)
    enc_before = estimate_encoder_flops([f.n_orig * m2 for f in history] + [n_cur * m2], params)
    enc_after = estimate_encoder_flops([f.realized_tokens * m2 for f in history] + [n_cur * m2], params)
    dec_before = dec_after = None
    if output_tokens is not None:
        dec_before = estimate_decode_flops(before, output_tokens, params)
        dec_after = estimate_decode_flops(after, output_tokens, params)

    return EfficiencyReport(
        tokens_before=before,
        tokens_after=after,
        encoder_flops_before=enc_before,
        encoder_flops_after=enc_after,
        prefill_flops_before=estimate_prefill_flops(before, params),
        prefill_flops_after=estimate_prefill_flops(after, params),
        decode_flops_before=dec_before,
        decode_flops_after=dec_after,
        frames=tuple(frames),
        config=config.to_dict(),
        metadata={
            "pruning_layer": config.pruning_layer,
            "output_tokens": output_tokens,
            "encoder_tokens_per_llm_token": m2,
        },
    )
