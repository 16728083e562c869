"""``prune`` command-line driver.

Exit codes: 0 success, 2 configuration or usage error, 3 input I/O or
parse error, 4 domain error (e.g. BudgetTooSmall, EmptyBudget).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import files
from .core import CompressionConfig
from .vision import RasterImage
from .errors import ConfigError, GuiPruneError, ParseError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DOMAIN = 4

log = logging.getLogger("guiprune")


def _dims(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}") from None


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def _add_config_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (flags override --config)")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--lambda", dest="lam", type=float, help="history retention ratio")
    g.add_argument("--gamma", type=float, help="oldest-frame weight")
    g.add_argument("--mu", type=float, help="current-frame retention ratio")
    g.add_argument("--rho", type=float, help="background saliency factor")
    g.add_argument("--history-len", type=int)
    g.add_argument("--patch-px", type=int)
    g.add_argument("--merge-factor", type=int)
    g.add_argument("--pruning-layer", type=int)


def _config(args, history_count: int | None = None) -> CompressionConfig:
    overrides = {
        "lambda": args.lam,
        "gamma": args.gamma,
        "mu": args.mu,
        "rho": args.rho,
        "history_len": args.history_len,
        "patch_px": args.patch_px,
        "merge_factor": args.merge_factor,
        "pruning_layer": args.pruning_layer,
    }
    data = files.read_config_dict(args.config) if args.config else {}
    if history_count:
        explicit = args.history_len is not None or "history_len" in data
        if not explicit:
            overrides["history_len"] = history_count
    cfg = files.build_config(data, overrides)
    if history_count and cfg.history_len != history_count:
        raise ConfigError(f"history_len={cfg.history_len} but {history_count} history frames given")
    return cfg


def _emit(obj, out: str | None) -> None:
    if out:
        files.write_json(obj, out)
    else:
        sys.stdout.write(files.dumps_json(obj))


def cmd_run(args) -> int:
    from .pipeline import EpisodeSpec, run_episode

    cfg = _config(args, len(args.history))
    spec = EpisodeSpec(
        history=tuple(args.history),
        current=args.current,
        config=cfg,
        importance=args.attention,
        synthetic_attention=args.synthetic_attention,
        seed=args.seed,
        output_tokens=args.output_tokens,
        history_policy=args.history_policy,
    )
    result = run_episode(spec, args.out, report_only=args.report_only)
    eff = result.document["efficiency"]
    print(
        f"tokens {eff['tokens']['before']} -> {eff['tokens']['after']} "
        f"(x{eff['tokens']['reduction_ratio']:.2f}); report: {Path(args.out) / 'report.json'}"
    )
    return EXIT_OK


def cmd_plan(args) -> int:
    from .tar import plan_history

    if args.history:
        dims = [files.load_image(p).dims for p in args.history]
    elif args.dims:
        dims = list(args.dims)
    else:
        raise ConfigError("give --history images or --dims WxH entries")
    cfg = _config(args, len(dims))
    plan = plan_history(dims, cfg, policy=args.history_policy)
    _emit(plan.to_dict(), args.out)
    return EXIT_OK


def cmd_partition(args) -> int:
    from .vision import partition_frame

    cfg = _config(args)
    part = partition_frame(files.load_image(args.current), cfg)
    summary = {
        "grid": {"rows": part.grid.rows, "cols": part.grid.cols},
        "n_tokens": part.grid.n_tokens,
        "n_foreground": part.mask.n_foreground,
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "partition_mask.txt").write_text(files.partition_mask_text(part.mask), encoding="utf-8")
        files.save_png(RasterImage(part.occupancy.data.astype(np.uint8) * 255), out / "occupancy.png")
        files.write_json(summary, out / "partition.json")
    sys.stdout.write(files.dumps_json(summary))
    return EXIT_OK


def cmd_report(args) -> int:
    from .pipeline import recompute_report

    path = Path(args.report)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg})", path, exc.lineno, exc.colno) from None
    cfg = None
    if args.config:
        cfg = files.load_config(args.config)
    _emit(recompute_report(doc, cfg, args.output_tokens), args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    from .fixtures import write_synthetic_episode

    cfg = _config(args)
    t = write_synthetic_episode(args.seed, args.out, cfg, args.width, args.height)
    print(f"wrote synthetic episode (seed={args.seed}, retained_total={t['retained_total']}) to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prune", description="Visual token compression for GUI agent screenshots")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full pipeline on one episode")
    _add_config_args(p)
    p.add_argument("--history", nargs="*", default=[], metavar="PNG", help="past frames, most recent first")
    p.add_argument("--current", required=True, metavar="PNG")
    p.add_argument("--attention", metavar="CSV", help="per-token importance map")
    p.add_argument("--synthetic-attention", action="store_true", help="synthesize importance when --attention is absent")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--report-only", action="store_true")
    p.add_argument("--output-tokens", type=int, help="decode length for decode-FLOPs estimates")
    p.add_argument("--history-policy", choices=("decay", "uniform"), default="decay")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plan", help="history budget plan only")
    _add_config_args(p)
    p.add_argument("--history", nargs="*", default=[], metavar="PNG")
    p.add_argument("--dims", nargs="*", type=_dims, metavar="WxH", help="frame sizes instead of images")
    p.add_argument("--history-policy", choices=("decay", "uniform"), default="decay")
    p.add_argument("--out", metavar="JSON")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("partition", help="edge pipeline only; emits the foreground mask")
    _add_config_args(p)
    p.add_argument("--current", required=True, metavar="PNG")
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("report", help="redo the accounting of a saved report.json")
    p.add_argument("report", metavar="REPORT_JSON")
    p.add_argument("--config", help="config whose cost_model replaces the saved one")
    p.add_argument("--output-tokens", type=int)
    p.add_argument("--out", metavar="JSON")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="write a synthetic fixture episode")
    _add_config_args(p)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--width", type=int, default=336)
    p.add_argument("--height", type=int, default=616)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GuiPruneError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
