"""Deterministic PNG renderings: flat colors, axis-aligned shapes, no anti-aliasing.

Glyphs come from a built-in 5x7 bitmap font so the output never depends on
system fonts.
"""

from __future__ import annotations

import io

from PIL import Image, ImageDraw

from ..envs.gridworld import UNSEEN, VIEW_SIZE, WALL, Door, GridObservation, Obj
from ..envs.hanoi import PEGS, HanoiState
from ..envs.messenger import MessengerObservation, MessengerState, Role, messenger_observe

HANOI_CANVAS = (320, 240)
TILE = 32
GLYPH_SCALE = 4

FONT_5X7 = {
    "A": ("01110", "10001", "10001", "11111", "10001", "10001", "10001"),
    "B": ("11110", "10001", "10001", "11110", "10001", "10001", "11110"),
    "C": ("01110", "10001", "10000", "10000", "10000", "10001", "01110"),
    "D": ("11110", "10001", "10001", "10001", "10001", "10001", "11110"),
    "E": ("11111", "10000", "10000", "11110", "10000", "10000", "11111"),
    "G": ("01110", "10001", "10000", "10111", "10001", "10001", "01111"),
    "K": ("10001", "10010", "10100", "11000", "10100", "10010", "10001"),
    "M": ("10001", "11011", "10101", "10101", "10001", "10001", "10001"),
    "P": ("11110", "10001", "10001", "11110", "10000", "10000", "10000"),
    "X": ("10001", "10001", "01010", "00100", "01010", "10001", "10001"),
}

WHITE = (255, 255, 255)
BLACK = (0, 0, 0)
PALETTE = {
    "red": (220, 40, 40),
    "green": (40, 170, 60),
    "blue": (50, 90, 220),
    "purple": (130, 60, 180),
    "yellow": (230, 200, 30),
    "grey": (128, 128, 128),
    "floor": (40, 40, 40),
    "wall": (170, 170, 170),
    "tile": (235, 235, 235),
    "gridline": (200, 200, 200),
    "peg": (110, 80, 50),
    "agent": (50, 90, 220),
}
DISK_COLORS = ((220, 40, 40), (40, 170, 60), (50, 90, 220), (230, 200, 30), (130, 60, 180))
ROLE_COLORS = {Role.ENEMY: (220, 40, 40), Role.MESSAGE: (230, 200, 30), Role.GOAL: (40, 170, 60)}
ROLE_GLYPHS = {Role.ENEMY: "E", Role.MESSAGE: "M", Role.GOAL: "G"}
KIND_GLYPHS = {"ball": "B", "box": "X", "key": "K"}


def draw_glyph(draw: ImageDraw.ImageDraw, ch: str, x: int, y: int, color, scale: int = GLYPH_SCALE) -> None:
    for row, bits in enumerate(FONT_5X7[ch]):
        for col, bit in enumerate(bits):
            if bit == "1":
                x0, y0 = x + col * scale, y + row * scale
                draw.rectangle([x0, y0, x0 + scale - 1, y0 + scale - 1], fill=color)


def _glyph_in_tile(draw: ImageDraw.ImageDraw, ch: str, x: int, y: int, color) -> None:
    # 5x7 at scale 4 is 20x28, centered in a 32x32 tile
    draw_glyph(draw, ch, x + 6, y + 2, color)


def _png(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG", optimize=False, compress_level=6)
    return buf.getvalue()


def peg_center(index: int) -> int:
    return HANOI_CANVAS[0] * (2 * index + 1) // 6


BASE_TOP = 200
DISK_HEIGHT = 20


def render_hanoi(state: HanoiState) -> bytes:
    img = Image.new("RGB", HANOI_CANVAS, WHITE)
    draw = ImageDraw.Draw(img)
    width = HANOI_CANVAS[0]
    draw.rectangle([8, BASE_TOP, width - 9, BASE_TOP + 7], fill=PALETTE["peg"])
    max_w = width // 3 - 10
    for i, (label, stack) in enumerate(zip(PEGS, state.pegs)):
        cx = peg_center(i)
        draw.rectangle([cx - 3, BASE_TOP - DISK_HEIGHT * (state.n_disks + 1), cx + 2, BASE_TOP - 1], fill=PALETTE["peg"])
        for level, disk in enumerate(stack):
            half = max_w * (disk + 1) // state.n_disks // 2
            top = BASE_TOP - DISK_HEIGHT * (level + 1)
            color = DISK_COLORS[disk % len(DISK_COLORS)]
            draw.rectangle([cx - half, top + 1, cx + half - 1, top + DISK_HEIGHT - 1], fill=color)
        draw_glyph(draw, label, cx - 5, BASE_TOP + 14, BLACK, scale=2)
    return _png(img)


def render_messenger(obs: MessengerObservation | MessengerState) -> bytes:
    if isinstance(obs, MessengerState):
        obs = messenger_observe(obs)
    rows, cols = obs.grid_size
    img = Image.new("RGB", (cols * TILE, rows * TILE), PALETTE["tile"])
    draw = ImageDraw.Draw(img)
    for r in range(rows):
        for c in range(cols):
            draw.rectangle([c * TILE, r * TILE, c * TILE + TILE - 1, r * TILE + TILE - 1], outline=PALETTE["gridline"])
    for e in obs.entities:
        x, y = e.pos[1] * TILE, e.pos[0] * TILE
        draw.rectangle([x + 1, y + 1, x + TILE - 2, y + TILE - 2], fill=ROLE_COLORS[e.role])
        _glyph_in_tile(draw, ROLE_GLYPHS[e.role], x, y, BLACK)
    x, y = obs.agent_pos[1] * TILE, obs.agent_pos[0] * TILE
    draw.rectangle([x + 1, y + 1, x + TILE - 2, y + TILE - 2], fill=PALETTE["agent"])
    _glyph_in_tile(draw, "P" if obs.has_message else "A", x, y, WHITE)
    return _png(img)


def render_grid(obs: GridObservation) -> bytes:
    """The egocentric window, agent at bottom centre pointing up."""
    img = Image.new("RGB", (VIEW_SIZE * TILE, VIEW_SIZE * TILE), BLACK)
    draw = ImageDraw.Draw(img)
    for j, row in enumerate(obs.view):
        for i, cell in enumerate(row):
            x, y = i * TILE, j * TILE
            box = [x, y, x + TILE - 1, y + TILE - 1]
            if cell is UNSEEN:
                continue
            if cell is WALL:
                draw.rectangle(box, fill=PALETTE["wall"])
                continue
            draw.rectangle(box, fill=PALETTE["floor"], outline=(60, 60, 60))
            if isinstance(cell, Obj):
                _glyph_in_tile(draw, KIND_GLYPHS[cell.kind], x, y, PALETTE[cell.color])
            elif isinstance(cell, Door):
                color = PALETTE[cell.color]
                if cell.is_open:
                    draw.rectangle(box, outline=color)
                else:
                    draw.rectangle([x + 1, y + 1, x + TILE - 2, y + TILE - 2], fill=color)
                    _glyph_in_tile(draw, "D", x, y, BLACK)
    ar, ac = obs.agent_cell
    x, y = ac * TILE, ar * TILE
    draw.polygon([(x + 16, y + 4), (x + 4, y + 27), (x + 27, y + 27)], fill=(255, 80, 80))
    return _png(img)


def render_image(obj: HanoiState | MessengerState | MessengerObservation | GridObservation) -> bytes:
    if isinstance(obj, HanoiState):
        return render_hanoi(obj)
    if isinstance(obj, (MessengerState, MessengerObservation)):
        return render_messenger(obj)
    if isinstance(obj, GridObservation):
        return render_grid(obj)
    raise TypeError(f"cannot render {type(obj).__name__}")
