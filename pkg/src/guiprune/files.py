"""File formats: PNG frames, importance CSV, config JSON, masks and reports."""
from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .core import CompressionConfig, ImportanceMap, PartitionMask, PruneSelection, Stratum, TokenGrid, label_grid
from .errors import ConfigError, GridMismatch, ParseError
from .vision import RasterImage

STRATUM_RGB = {
    Stratum.FG: (255, 0, 0),
    Stratum.BG: (0, 255, 0),
    Stratum.UNI: (0, 0, 255),
}


def load_image(path) -> RasterImage:
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB")
            return RasterImage(np.asarray(im))
    except OSError as exc:
        raise OSError(f"{path}: cannot read image ({exc})") from exc


def save_png(img: RasterImage, path) -> None:
    Image.fromarray(np.ascontiguousarray(img.data)).save(Path(path), format="PNG")


def load_importance_csv(path, patch_px: int = 14, merge_factor: int = 2) -> ImportanceMap:
    """Read ``rows,cols`` then ``rows`` lines of ``cols`` non-negative floats."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"{path}: cannot read importance map ({exc.strerror or exc})") from exc
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ParseError("empty file", path, 1)

    header = lines[0].split(",")
    if len(header) != 2:
        raise ParseError("header must be 'rows,cols'", path, 1)
    try:
        rows, cols = (int(h.strip()) for h in header)
    except ValueError:
        raise ParseError("header must hold two integers", path, 1) from None
    if rows < 1 or cols < 1:
        raise ParseError("rows and cols must be positive", path, 1)
    if len(lines) - 1 < rows:
        raise ParseError(f"expected {rows} data lines, found {len(lines) - 1}", path, len(lines) + 1)
    if len(lines) - 1 > rows:
        raise ParseError(f"unexpected data beyond {rows} rows", path, rows + 2)

    scores = np.empty(rows * cols, dtype=np.float64)
    for r in range(rows):
        lineno = r + 2
        cells = lines[r + 1].split(",")
        if len(cells) != cols:
            raise ParseError(f"expected {cols} values, found {len(cells)}", path, lineno)
        for c, cell in enumerate(cells):
            try:
                v = float(cell.strip())
            except ValueError:
                raise ParseError(f"not a number: {cell.strip()!r}", path, lineno, c + 1) from None
            if not math.isfinite(v):
                raise ParseError("value is not finite", path, lineno, c + 1)
            if v < 0:
                raise ParseError("value is negative", path, lineno, c + 1)
            scores[r * cols + c] = v
    return ImportanceMap(TokenGrid(rows, cols, patch_px, merge_factor), scores)


def write_importance_csv(imp: ImportanceMap, path) -> None:
    g = imp.grid
    s = imp.as_2d()
    out = [f"{g.rows},{g.cols}"]
    out += [",".join(repr(float(v)) for v in row) for row in s]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def align_importance(imp: ImportanceMap, grid: TokenGrid) -> ImportanceMap:
    if (imp.grid.rows, imp.grid.cols) != (grid.rows, grid.cols):
        raise GridMismatch(
            f"importance map is {imp.grid.rows}x{imp.grid.cols} but the frame grid is {grid.rows}x{grid.cols}"
        )
    return ImportanceMap(grid, imp.scores)


# --- config ---------------------------------------------------------------


def config_schema() -> dict:
    return json.loads(resources.files("guiprune").joinpath("config.schema.json").read_text(encoding="utf-8"))


def validate_config_dict(data: dict) -> None:
    import jsonschema

    try:
        jsonschema.validate(data, config_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from None


def read_config_dict(path) -> dict:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"{path}: cannot read config ({exc.strerror or exc})") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def build_config(data: dict | None = None, overrides: dict | None = None) -> CompressionConfig:
    """Defaults, then ``data``, then the non-None entries of ``overrides``."""
    merged = dict(data or {})
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "cost_model":
            merged["cost_model"] = {**merged.get("cost_model", {}), **value}
        else:
            merged[key] = value
    validate_config_dict(merged)
    return CompressionConfig.from_dict(merged)


def load_config(path=None, overrides: dict | None = None) -> CompressionConfig:
    return build_config(read_config_dict(path) if path is not None else {}, overrides)


# --- masks, overlays, reports ---------------------------------------------


def token_mask_text(selection: PruneSelection) -> str:
    """``rows,cols`` header, then one character per token: F, B, U or '.'."""
    g = selection.grid
    body = ["".join(row) for row in label_grid(selection)]
    return "\n".join([f"{g.rows},{g.cols}", *body]) + "\n"


def partition_mask_text(mask: PartitionMask) -> str:
    """``rows,cols`` header, then ``#`` for foreground and ``.`` for background."""
    g = mask.grid
    body = ["".join("#" if v else "." for v in row) for row in mask.as_2d()]
    return "\n".join([f"{g.rows},{g.cols}", *body]) + "\n"


def render_overlay(img: RasterImage, selection: PruneSelection, alpha: float = 0.45,
                   dim: float = 0.35) -> RasterImage:
    """Tint kept tokens by stratum (red FG, green BG, blue UNI); darken dropped ones."""
    g = selection.grid
    rgb = img.data if img.channels == 3 else np.repeat(img.data[:, :, None], 3, axis=2)
    out = rgb.astype(np.float64)
    color = np.zeros((g.n_tokens, 3))
    weight = np.zeros(g.n_tokens)
    keep = np.zeros(g.n_tokens, dtype=bool)
    for i, s in selection.retained:
        color[i] = STRATUM_RGB[s]
        weight[i] = alpha
        keep[i] = True
    s = g.cell_px
    ew, eh = g.pixel_extent
    up = lambda a: np.repeat(np.repeat(a.reshape(g.rows, g.cols, *a.shape[1:]), s, axis=0), s, axis=1)
    region = out[:eh, :ew]
    w = up(weight)[..., None]
    kept = up(keep)[..., None]
    tinted = region * (1 - w) + up(color) * w
    out[:eh, :ew] = np.where(kept, tinted, region * dim)
    # grid lines make cell boundaries visible
    out[:eh:s, :ew] *= 0.6
    out[:eh, :ew:s] *= 0.6
    return RasterImage(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps_json(obj), encoding="utf-8")
