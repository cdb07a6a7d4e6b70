"""Programmatic top-down ASCII maps built from the true state, and a parser for them.

Grid maps look like::

    Map (Top-Down View):
    Row1: . . . .
    Row2: . . A .
    Legend:
    A = Agent
    R = Robot (message; secret document)

Messenger maps are cropped to the rows and columns from the origin up to the
farthest occupied cell, so Row K / column c always mean grid cell (K-1, c).
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass

from ..core import StateRepError
from ..envs.gridworld import WALL, Door, GridWorldState, Obj
from ..envs.hanoi import PEGS, HanoiState
from ..envs.messenger import MessengerState

HEADER = "Map (Top-Down View):"
AGENT = "A"
EMPTY = "."
WALL_GLYPH = "#"
_RESERVED = {AGENT, EMPTY, WALL_GLYPH}


class VotParseError(StateRepError):
    pass


def _pick_glyph(words: list[str], used: set[str]) -> str:
    for word in words:
        for ch in word.upper():
            if ch in string.ascii_uppercase and ch not in used and ch not in _RESERVED:
                return ch
    for ch in string.ascii_uppercase:
        if ch not in used and ch not in _RESERVED:
            return ch
    raise ValueError("ran out of map glyphs")


def _render(grid: list[list[str]], legend: list[str]) -> str:
    lines = [HEADER]
    lines += [f"Row{k}: " + " ".join(row) for k, row in enumerate(grid, start=1)]
    lines.append("Legend:")
    lines += legend
    return "\n".join(lines)


def _hanoi_map(state: HanoiState) -> str:
    lines = [HEADER]
    for label, stack in zip(PEGS, state.pegs):
        line = f"Rod {label}: [" + ", ".join(map(str, stack)) + "]"
        if stack:
            line += f"  (top is {stack[-1]}, bottom is {stack[0]})"
        lines.append(line)
    return "\n".join(lines)


def _messenger_map(state: MessengerState) -> str:
    entities = state.visible_entities()
    cells = [state.agent_pos, *(e.pos for e in entities)]
    rows = max(r for r, _ in cells) + 1
    cols = max(c for _, c in cells) + 1
    grid = [[EMPTY] * cols for _ in range(rows)]
    grid[state.agent_pos[0]][state.agent_pos[1]] = AGENT
    used: set[str] = set()
    legend_by_pos = {}
    for e in sorted(entities, key=lambda e: e.pos):
        glyph = _pick_glyph([e.name], used)
        used.add(glyph)
        grid[e.pos[0]][e.pos[1]] = glyph
        detail = f"{e.role.value}; {e.alias}" if e.alias else e.role.value
        legend_by_pos[e.pos] = f"{glyph} = {e.name.capitalize()} ({detail})"
    agent_line = "A = Agent (carrying message)" if state.has_message else "A = Agent"
    return _render(grid, [agent_line, *(legend_by_pos[p] for p in sorted(legend_by_pos))])


def _grid_map(state: GridWorldState) -> str:
    rows, cols = state.shape
    grid = [[EMPTY] * cols for _ in range(rows)]
    used: set[str] = set()
    legend = []
    for r in range(rows):
        for c in range(cols):
            cell = state.layout[r][c]
            if cell is WALL:
                grid[r][c] = WALL_GLYPH
            elif (r, c) == state.agent_pos:
                continue
            elif isinstance(cell, Obj):
                glyph = _pick_glyph([cell.kind, cell.color], used)
                used.add(glyph)
                grid[r][c] = glyph
                legend.append(f"{glyph} = {cell.color} {cell.kind}")
            elif isinstance(cell, Door):
                glyph = _pick_glyph(["door", cell.color], used)
                used.add(glyph)
                grid[r][c] = glyph
                legend.append(f"{glyph} = {cell.color} door ({cell.state})")
    grid[state.agent_pos[0]][state.agent_pos[1]] = AGENT
    agent = f"A = Agent (facing {state.heading.word}"
    agent += f"; carrying {state.carrying.describe()})" if state.carrying else ")"
    return _render(grid, [agent, *legend])


def oracle_vot_map(state: HanoiState | MessengerState | GridWorldState) -> str:
    if isinstance(state, HanoiState):
        return _hanoi_map(state)
    if isinstance(state, MessengerState):
        return _messenger_map(state)
    if isinstance(state, GridWorldState):
        return _grid_map(state)
    raise TypeError(f"no oracle map for {type(state).__name__}")


@dataclass(frozen=True)
class ParsedMap:
    agent: tuple[int, int]
    entities: dict[str, tuple[tuple[int, int], str]]  # glyph -> (position, legend text)
    rows: int
    cols: int

    def positions_by_label(self) -> dict[str, tuple[int, int]]:
        """Lower-cased legend name (text before any parenthesis) -> position."""
        out = {"agent": self.agent}
        for pos, text in self.entities.values():
            out[text.split(" (")[0].lower()] = pos
        return out


_ROW = re.compile(r"Row(\d+): (.*)$")
_LEGEND = re.compile(r"(\S) = (.+)$")


def parse_vot_map(text: str) -> ParsedMap:
    """Read the first map in `text`; the header may carry a prefix such as "1. "."""
    lines = [ln.strip() for ln in text.strip("\n").splitlines()]
    start = next((i for i, ln in enumerate(lines) if HEADER in ln), None)
    if start is None:
        raise VotParseError(f"missing {HEADER!r} header")
    try:
        legend_at = lines.index("Legend:", start)
    except ValueError:
        raise VotParseError("missing 'Legend:' section") from None

    grid: list[list[str]] = []
    for k, line in enumerate(lines[start + 1:legend_at], start=1):
        m = _ROW.match(line)
        if not m or int(m.group(1)) != k:
            raise VotParseError(f"expected Row{k}, got {line!r}")
        glyphs = m.group(2).split(" ")
        if any(len(g) != 1 for g in glyphs):
            raise VotParseError(f"Row{k}: glyphs must be single characters separated by spaces")
        if grid and len(glyphs) != len(grid[0]):
            raise VotParseError(f"Row{k}: ragged row")
        grid.append(glyphs)
    if not grid:
        raise VotParseError("map has no rows")

    legend: dict[str, str] = {}
    for line in lines[legend_at + 1:]:
        if not line.strip():
            break
        m = _LEGEND.match(line.strip())
        if not m:
            raise VotParseError(f"malformed legend line {line!r}")
        if m.group(1) in legend:
            raise VotParseError(f"glyph {m.group(1)!r} defined twice in legend")
        legend[m.group(1)] = m.group(2)

    seen: dict[str, tuple[int, int]] = {}
    for r, row in enumerate(grid):
        for c, glyph in enumerate(row):
            if glyph in (EMPTY, WALL_GLYPH):
                continue
            if glyph in seen:
                raise VotParseError(f"glyph {glyph!r} used more than once in the map")
            if glyph not in legend:
                raise VotParseError(f"glyph {glyph!r} missing from legend")
            seen[glyph] = (r, c)
    if AGENT not in seen:
        raise VotParseError("agent glyph 'A' not found in map")
    missing = set(legend) - set(seen)
    if missing:
        raise VotParseError(f"legend glyphs not on the map: {sorted(missing)}")
    entities = {g: (pos, legend[g]) for g, pos in seen.items() if g != AGENT}
    return ParsedMap(seen[AGENT], entities, len(grid), len(grid[0]))
