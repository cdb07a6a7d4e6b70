"""Per-episode trajectory store, long-form rendering and the rolling summary."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .envs.hanoi import PEGS, HanoiState
from .templates import PromptBundle, TemplateId, fill

if TYPE_CHECKING:
    from .llm import Gateway, ModelReply

log = logging.getLogger(__name__)

START_OF_GAME = "Start of game"
SUMMARY_TOKEN_BUDGET = 25
SUMMARY_HARD_CAP = 60
INDENT = " " * 8


@dataclass(frozen=True)
class StepRecord:
    timestep: int
    observation: str
    action_label: str
    reward: float


@dataclass
class TrajectoryMemory:
    records: list[StepRecord] = field(default_factory=list)
    rolling_summary: str = START_OF_GAME
    summary_violations: int = 0
    summary_failures: int = 0

    def append(self, timestep: int, observation: str, action_label: str, reward: float) -> None:
        expected = self.records[-1].timestep + 1 if self.records else timestep
        if timestep != expected:
            raise ValueError(f"timestep {timestep} out of order; expected {expected}")
        self.records.append(StepRecord(timestep, observation, action_label, reward))


def whitespace_tokens(text: str) -> int:
    return len(text.split())


def _history_lines(records: list[StepRecord]) -> list[str]:
    lines = []
    for rec in records:
        obs = rec.observation.split("\n")
        if len(obs) > 1 and obs[0] == f"You took action {rec.action_label}.":
            obs = obs[1:]  # the step header already says it
        lines.append(f"Step {rec.timestep}: You took action {rec.action_label}. {obs[0]}".rstrip())
        lines += [INDENT + ln if ln else "" for ln in obs[1:]]
    return lines


def format_long_form(memory: TrajectoryMemory, window: int) -> str:
    """The most recent `window` steps under a "Past trajectory:" header."""
    if window < 1:
        raise ValueError("window must be >= 1")
    lines = _history_lines(memory.records[-window:])
    return "\n".join(["Past trajectory:", *(lines or ["(none)"])])


def format_summary_block(memory: TrajectoryMemory) -> str:
    return f"Summary of past actions:\n{memory.rolling_summary}"


def extract_summary(reply: str) -> str | None:
    """Text of the last non-empty "Summary:" line (or the line right after it)."""
    lines = reply.splitlines()
    found = None
    for i, line in enumerate(lines):
        head, sep, tail = line.partition("Summary:")
        if not sep:
            continue
        text = tail.strip()
        if not text:
            text = next((ln.strip() for ln in lines[i + 1:] if ln.strip()), "")
        if text and text != "<concise summary here>":
            found = text
    return found


def summariser_prompt(memory: TrajectoryMemory, manual: str, window: int) -> PromptBundle:
    lines = _history_lines(memory.records[-window:])
    recent = "\n" + "\n".join(lines) if lines else "(none)"
    text = fill(
        TemplateId.SUMMARISER,
        manual=manual,
        recent_history=recent,
        previous_summary=memory.rolling_summary,
    )
    return PromptBundle(text, TemplateId.SUMMARISER)


def update_summary(
    memory: TrajectoryMemory,
    manual: str,
    llm: Gateway,
    window: int,
    replies: list[ModelReply] | None = None,
) -> str:
    """Refresh memory.rolling_summary from the summariser model.

    An empty history short-circuits to "Start of game" without a call. A reply
    lacking a "Summary:" line is retried once; after that the previous summary
    is kept. Completed replies are appended to `replies` for token accounting.
    """
    if not memory.records:
        memory.rolling_summary = START_OF_GAME
        return memory.rolling_summary
    bundle = summariser_prompt(memory, manual, window)
    summary = None
    for _ in range(2):
        reply = llm.chat(bundle)
        if replies is not None:
            replies.append(reply)
        summary = extract_summary(reply.text)
        if summary is not None:
            break
    if summary is None:
        memory.summary_failures += 1
        log.warning("summariser reply had no 'Summary:' line twice; keeping previous summary")
        return memory.rolling_summary
    tokens = summary.split()
    if len(tokens) > SUMMARY_TOKEN_BUDGET:
        memory.summary_violations += 1
    if len(tokens) > SUMMARY_HARD_CAP:
        summary = " ".join(tokens[:SUMMARY_HARD_CAP])
    memory.rolling_summary = summary
    return summary


def _join(items: list[str]) -> str:
    if len(items) <= 2:
        return " and ".join(items)
    return ", ".join(items[:-1]) + ", and " + items[-1]


def oracle_summary_hanoi(state: HanoiState) -> str:
    """Exact current configuration plus the goal, written as one sentence."""
    clauses = []
    for label, stack in zip(PEGS, state.pegs):
        if len(stack) == 1:
            clauses.append(f"peg {label} has disk {stack[0]}")
        elif stack:
            clauses.append(f"peg {label} has disks {_join([str(d) for d in stack])} from bottom to top")
    empty = [label for label, stack in zip(PEGS, state.pegs) if not stack]
    if len(empty) == 1:
        clauses.append(f"peg {empty[0]} is empty")
    elif empty:
        clauses.append(f"pegs {_join(empty)} are empty")
    sentence = "; ".join(clauses)
    return f"{sentence[0].upper()}{sentence[1:]}. Goal: move all disks to peg {state.goal_peg}."
