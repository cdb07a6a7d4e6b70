"""Text renderings of a Hanoi configuration, and the matching parsers."""

from __future__ import annotations

import re

from ..core import StateRepError
from ..envs.hanoi import PEGS, HanoiState
from .spec import Structure

PAD = -1


class HanoiParseError(StateRepError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


def _peg_sentence(label: str, stack: tuple[int, ...]) -> str:
    if not stack:
        return f"Peg {label} is empty."
    if len(stack) == 1:
        return f"Peg {label} has disk {stack[0]}."
    bottom, *middle, top = stack
    parts = [f"disk {bottom} at the bottom"]
    if middle:
        parts.append(", ".join(f"disk {d}" for d in middle) + " in the middle")
    if len(parts) == 1:
        return f"Peg {label} has {parts[0]} and disk {top} on top."
    return f"Peg {label} has {', '.join(parts)}, and disk {top} on top."


def _int_list(stack: tuple[int, ...] | list[int]) -> str:
    return "[" + ", ".join(str(d) for d in stack) + "]"


def encode_hanoi(state: HanoiState, structure: Structure | str) -> str:
    structure = Structure(structure)
    if structure is Structure.NATURAL_LANGUAGE:
        return " ".join(_peg_sentence(label, stack) for label, stack in zip(PEGS, state.pegs))
    if structure is Structure.DICT_LIST:
        return "{" + ", ".join(f"'{label}': {_int_list(s)}" for label, s in zip(PEGS, state.pegs)) + "}"
    if structure is Structure.MATRIX:
        rows = [list(s) + [PAD] * (state.n_disks - len(s)) for s in state.pegs]
        return "[" + ", ".join(_int_list(r) for r in rows) + "]"
    if structure is Structure.TAGGED_LIST:
        return "\n".join(f"- {label}: |bottom, {_int_list(s)}, top|" for label, s in zip(PEGS, state.pegs))
    raise ValueError(f"{structure.value} is not a Hanoi structure")


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def expect(self, literal: str) -> None:
        self.skip_ws()
        if not self.text.startswith(literal, self.pos):
            found = self.text[self.pos:self.pos + len(literal)] or "end of input"
            raise HanoiParseError(f"expected {literal!r}, found {found!r}", self.pos)
        self.pos += len(literal)

    def peek(self, literal: str) -> bool:
        self.skip_ws()
        return self.text.startswith(literal, self.pos)

    def integer(self) -> int:
        self.skip_ws()
        m = re.compile(r"-?\d+").match(self.text, self.pos)
        if not m:
            raise HanoiParseError("expected an integer", self.pos)
        self.pos = m.end()
        return int(m.group())

    def int_list(self) -> list[int]:
        self.expect("[")
        values: list[int] = []
        if self.peek("]"):
            self.pos += 1
            return values
        values.append(self.integer())
        while self.peek(","):
            self.pos += 1
            values.append(self.integer())
        self.expect("]")
        return values

    def end(self) -> None:
        self.skip_ws()
        if self.pos != len(self.text.rstrip("\n")):
            raise HanoiParseError("unexpected trailing text", self.pos)


def _build(stacks: list[list[int]], start: int) -> HanoiState:
    try:
        return HanoiState.from_dict(dict(zip(PEGS, stacks)))
    except ValueError as exc:
        raise HanoiParseError(str(exc), start) from None


def decode_hanoi(text: str, structure: Structure | str) -> HanoiState:
    structure = Structure(structure)
    if structure is Structure.NATURAL_LANGUAGE:
        return _decode_natural(text)
    sc = _Scanner(text)
    stacks: list[list[int]] = []
    if structure is Structure.DICT_LIST:
        sc.expect("{")
        for i, label in enumerate(PEGS):
            if i:
                sc.expect(",")
            sc.expect(f"'{label}'")
            sc.expect(":")
            stacks.append(sc.int_list())
        sc.expect("}")
        sc.end()
    elif structure is Structure.MATRIX:
        sc.expect("[")
        rows: list[list[int]] = []
        row_starts = []
        for i in range(len(PEGS)):
            if i:
                sc.expect(",")
            sc.skip_ws()
            row_starts.append(sc.pos)
            rows.append(sc.int_list())
        sc.expect("]")
        sc.end()
        width = len(rows[0])
        for row, start in zip(rows, row_starts):
            if len(row) != width:
                raise HanoiParseError(f"ragged matrix: row of length {len(row)}, expected {width}", start)
            disks = [d for d in row if d != PAD]
            if row[: len(disks)] != disks or any(d < PAD for d in row):
                raise HanoiParseError("padding must trail the disks and equal -1", start)
            stacks.append(disks)
        if sum(len(s) for s in stacks) != width:
            raise HanoiParseError(f"matrix rows must have one slot per disk ({width})", 0)
    elif structure is Structure.TAGGED_LIST:
        for i, label in enumerate(PEGS):
            if i:
                sc.skip_ws()
                while sc.peek("\n"):
                    sc.pos += 1
            sc.expect(f"- {label}:")
            sc.expect("|bottom,")
            stacks.append(sc.int_list())
            sc.expect(", top|")
        sc.end()
    else:
        raise ValueError(f"{structure.value} is not a Hanoi structure")
    return _build(stacks, 0)


_SENTENCE = re.compile(r"Peg ([ABC]) (is empty|has [^.]*)\.")


def _decode_natural(text: str) -> HanoiState:
    found = {}
    pos = 0
    for m in _SENTENCE.finditer(text):
        if text[pos:m.start()].strip():
            raise HanoiParseError("unexpected text between sentences", pos)
        found[m.group(1)] = [int(d) for d in re.findall(r"disk (\d+)", m.group(2))]
        pos = m.end()
    if text[pos:].strip():
        raise HanoiParseError("unexpected trailing text", pos)
    if sorted(found) != list(PEGS):
        raise HanoiParseError("expected one sentence per peg A, B, C", pos)
    return _build([found[p] for p in PEGS], 0)
