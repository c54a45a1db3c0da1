"""Generative backends: deterministic mock renderers plus external directive files.

The mocks draw each box as a filled rectangle under orthographic projection.
Rasterization decisions run on exact rational arithmetic with round-half-away
rounding, so identical inputs produce identical bytes on every platform.  Real
toolchains are driven instead through JSON directive files.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from fractions import Fraction

from . import png
from .edits import DEFAULT_CONFIG, EditConfig, EditPlan, apply as apply_plan, plan_to_json
from .layout import BoxObject, Dialect, Layout, UnsupportedDialect, layout_to_json

VIEW_NAMES = ("front", "top", "three_quarter")

# 16 stable box colors; objects hash into this palette by description.
PALETTE = (
    (230, 57, 70), (29, 53, 87), (69, 123, 157), (168, 218, 220),
    (241, 196, 15), (46, 204, 113), (155, 89, 182), (211, 84, 0),
    (52, 152, 219), (26, 188, 156), (243, 156, 18), (127, 140, 141),
    (192, 57, 43), (142, 68, 173), (39, 174, 96), (22, 160, 133),
)

BACKGROUND = (255, 255, 255, 255)
BORDER = (0, 0, 0, 255)


def fnv1a(data: bytes) -> int:
    h = 2166136261
    for b in data:
        h ^= b
        h = (h * 16777619) & 0xFFFFFFFF
    return h


def palette_color(description: str) -> tuple[int, int, int]:
    return PALETTE[fnv1a(description.encode("utf-8")) % 16]


@dataclass(frozen=True)
class Image:
    width: int
    height: int
    pixels: bytes

    def to_png(self) -> bytes:
        return png.encode_rgba(self.width, self.height, self.pixels)

    def pixel(self, x: int, y: int) -> tuple[int, int, int, int]:
        i = (y * self.width + x) * 4
        return tuple(self.pixels[i:i + 4])


@dataclass(frozen=True)
class RenderResult:
    views: tuple[tuple[str, Image], ...]
    layout_snapshot: Layout
    backend_id: str

    def view(self, name: str) -> Image:
        for view_name, image in self.views:
            if view_name == name:
                return image
        raise KeyError(name)

    def view_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.views)


@dataclass(frozen=True)
class RenderConfig:
    image_size: int = 512
    views: tuple[str, ...] = VIEW_NAMES


def _round_half_away(value: Fraction) -> int:
    if value >= 0:
        return int(value + Fraction(1, 2))
    return -int(-value + Fraction(1, 2))


class _Canvas:
    def __init__(self, size: int):
        self.size = size
        self.buf = bytearray(BACKGROUND * (size * size))

    def put(self, x: int, y: int, rgba) -> None:
        if 0 <= x < self.size and 0 <= y < self.size:
            i = (y * self.size + x) * 4
            self.buf[i:i + 4] = bytes(rgba)

    def fill_rect(self, x0: int, x1: int, y0: int, y1: int, rgba) -> None:
        x0, x1 = max(x0, 0), min(x1, self.size)
        y0, y1 = max(y0, 0), min(y1, self.size)
        if x0 >= x1 or y0 >= y1:
            return
        row = bytes(rgba) * (x1 - x0)
        for y in range(y0, y1):
            i = (y * self.size + x0) * 4
            self.buf[i:i + len(row)] = row

    def outline_rect(self, x0: int, x1: int, y0: int, y1: int, rgba) -> None:
        self.fill_rect(x0, x1, y0, y0 + 1, rgba)
        self.fill_rect(x0, x1, y1 - 1, y1, rgba)
        self.fill_rect(x0, x0 + 1, y0, y1, rgba)
        self.fill_rect(x1 - 1, x1, y0, y1, rgba)

    def image(self) -> Image:
        return Image(self.size, self.size, bytes(self.buf))


def _px_range(lo: Fraction, hi: Fraction) -> tuple[int, int]:
    # continuous coordinates are already in pixel units
    return _round_half_away(lo), _round_half_away(hi)


def _unit_to_px(v: Fraction, size: int) -> Fraction:
    # [-1, 1] -> [0, size)
    return (v + 1) / 2 * size


def _draw_box(canvas: _Canvas, index: int, description: str,
              u: tuple[Fraction, Fraction], v_rows: tuple[Fraction, Fraction]) -> None:
    """u is the horizontal pixel interval; v_rows the vertical one (top, bottom)."""
    x0, x1 = _px_range(u[0], u[1])
    y0, y1 = _px_range(v_rows[0], v_rows[1])
    if x0 >= x1 or y0 >= y1:
        return
    canvas.fill_rect(x0, x1, y0, y1, palette_color(description) + (255,))
    canvas.outline_rect(x0, x1, y0, y1, BORDER)
    # index label: (index + 1) tick marks inside the top-left corner
    for t in range(index + 1):
        tx = x0 + 2 + 3 * t
        if tx + 1 >= x1 - 1:
            break
        for dy in (2, 3):
            for dx in (0, 1):
                if y0 + dy < y1 - 1:
                    canvas.put(tx + dx, y0 + dy, BORDER)


def _frac(value: float) -> Fraction:
    return Fraction(value)


def _box_bounds(obj: BoxObject, axis: int) -> tuple[Fraction, Fraction]:
    c, s = _frac(obj.center[axis]), _frac(obj.scale[axis])
    return c - s / 2, c + s / 2


def _project_3d(obj: BoxObject, view: str, size: int):
    x_lo, x_hi = _box_bounds(obj, 0)
    y_lo, y_hi = _box_bounds(obj, 1)
    z_lo, z_hi = _box_bounds(obj, 2)
    if view == "front":
        u = (x_lo, x_hi)
        v = (y_lo, y_hi)
    elif view == "top":
        u = (x_lo, x_hi)
        v = (-z_hi, -z_lo)  # +z (front) toward the bottom of the image
    elif view == "three_quarter":
        zc = (z_lo + z_hi) / 2
        u = (x_lo + zc * Fraction(2, 5), x_hi + zc * Fraction(2, 5))
        v = (y_lo + zc * Fraction(1, 5), y_hi + zc * Fraction(1, 5))
    else:
        raise KeyError(f"unknown view {view!r}")
    cols = (_unit_to_px(u[0], size), _unit_to_px(u[1], size))
    # vertical axis points up: larger v is nearer the top row
    rows = ((1 - v[1]) / 2 * size, (1 - v[0]) / 2 * size)
    return cols, rows


def _paint_order_3d(layout: Layout, view: str) -> list[int]:
    if view == "top":
        key = lambda i: (layout.objects[i].center[1], i)
    else:
        key = lambda i: (layout.objects[i].center[2], i)
    return sorted(range(len(layout.objects)), key=key)


def mock3d_render(layout: Layout, config: RenderConfig = RenderConfig()) -> RenderResult:
    """Orthographic box rasterization for the 3D dialects; nearer boxes overpaint."""
    if layout.dialect is Dialect.IMAGE2D:
        raise UnsupportedDialect("mock3d handles 3D dialects only")
    views = []
    for view in config.views:
        canvas = _Canvas(config.image_size)
        for index in _paint_order_3d(layout, view):
            obj = layout.objects[index]
            cols, rows = _project_3d(obj, view, config.image_size)
            _draw_box(canvas, index, obj.description, cols, rows)
        views.append((view, canvas.image()))
    return RenderResult(tuple(views), layout, "mock3d")


def mock2d_render(layout: Layout, config: RenderConfig = RenderConfig()) -> RenderResult:
    """2D compositor: y runs down the canvas, later objects draw over earlier ones."""
    if layout.dialect is not Dialect.IMAGE2D:
        raise UnsupportedDialect("mock2d handles the 2D dialect only")
    canvas = _Canvas(config.image_size)
    for index, obj in enumerate(layout.objects):
        x_lo, x_hi = _box_bounds(obj, 0)
        y_lo, y_hi = _box_bounds(obj, 1)
        cols = (x_lo * config.image_size, x_hi * config.image_size)
        rows = (y_lo * config.image_size, y_hi * config.image_size)
        _draw_box(canvas, index, obj.description, cols, rows)
    return RenderResult((("front", canvas.image()),), layout, "mock2d")


class Mock3DBackend:
    """Memoryless mock of the layout-to-3D pipeline."""

    backend_id = "mock3d"

    def __init__(self, config: RenderConfig = RenderConfig()):
        self.config = config

    def init(self, layout: Layout) -> RenderResult:
        return mock3d_render(layout, self.config)

    def apply(self, prev: RenderResult, plan: EditPlan) -> RenderResult:
        return self.init(apply_plan(prev.layout_snapshot, plan))


class Mock2DBackend:
    """Memoryless mock of the layout-to-image pipeline.

    Edits recomposite the full canvas: removals restore exact background
    (ideal inpainting) and adds/moves redraw rectangles (ideal mask + paste).
    """

    backend_id = "mock2d"

    def __init__(self, config: RenderConfig = RenderConfig()):
        self.config = config

    def init(self, layout: Layout) -> RenderResult:
        return mock2d_render(layout, self.config)

    def apply(self, prev: RenderResult, plan: EditPlan) -> RenderResult:
        return self.init(apply_plan(prev.layout_snapshot, plan))


def backend_for(dialect: Dialect, config: RenderConfig = RenderConfig()):
    if dialect is Dialect.IMAGE2D:
        return Mock2DBackend(config)
    return Mock3DBackend(config)


def box_pixel_rect(obj: BoxObject, size: int, dilate_px: int = 0) -> tuple[int, int, int, int]:
    """The (x0, x1, y0, y1) pixel rectangle a 2D box covers, optionally dilated."""
    x_lo, x_hi = _box_bounds(obj, 0)
    y_lo, y_hi = _box_bounds(obj, 1)
    x0 = _round_half_away(x_lo * size) - dilate_px
    x1 = _round_half_away(x_hi * size) + dilate_px
    y0 = _round_half_away(y_lo * size) - dilate_px
    y1 = _round_half_away(y_hi * size) + dilate_px
    return max(x0, 0), min(x1, size), max(y0, 0), min(y1, size)


def emit_external_directives(
    plan: EditPlan,
    layout: Layout,
    path: str | os.PathLike,
    config: EditConfig = DEFAULT_CONFIG,
) -> dict:
    """Write the directive document an external toolchain executes; returns it."""
    doc = {
        "schema_version": 1,
        "dialect": layout.dialect.value,
        "layout": layout_to_json(layout),
        "plan": plan_to_json(plan),
        "training": {
            "loss_weight": config.loss_weight,
            "learning_rate": config.learning_rate,
            "train_scratch_iterations": config.train_scratch_iters,
            "train_local_iterations": config.train_local_iters,
            "joint_finetune_iterations": config.joint_finetune_iters,
            "finetune_object_iterations": config.finetune_object_iters,
        },
        "masking": {
            "score_rank": config.mask_score_rank,
            "dilate_px": config.mask_dilate_px,
        },
        "box_scale_semantics": "full_extent" if config.scale_full_extent else "half_extent",
    }
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return doc
