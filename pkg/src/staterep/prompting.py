"""Agent prompt assembly, reply parsing and the malformed-reply fallback."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .core import ConfigError, StateRepError
from .encoders.spec import EncodedObservation, Granularity, Grounding, RepresentationSpec
from .memory import TrajectoryMemory, format_long_form, format_summary_block
from .templates import PromptBundle, TemplateId, fill

if TYPE_CHECKING:
    from .llm import Gateway, ModelReply


class ActionParseError(StateRepError):
    def __init__(self, message: str, raw_reply: str):
        super().__init__(message)
        self.raw_reply = raw_reply


@dataclass(frozen=True)
class ParsedAction:
    action_index: int
    reason: str
    raw_reply: str
    fallback_used: bool = False


def question_text(action_labels: Sequence[str]) -> str:
    listed = "\n".join(f"{i}. {label}" for i, label in enumerate(action_labels, start=1))
    return f"Which action do you take next? Available actions:\n{listed}"


def _trajectory_block(spec: RepresentationSpec, memory: TrajectoryMemory, window: int) -> str:
    if spec.granularity is Granularity.SUMMARY:
        return format_summary_block(memory)
    return format_long_form(memory, window)


def _check(spec: RepresentationSpec, encoded_obs: EncodedObservation, family: str) -> None:
    spec.validate_for(family)
    if encoded_obs.format_label is not spec.structure:
        raise ConfigError(
            f"observation encoded as {encoded_obs.format_label.value}, spec asks for {spec.structure.value}"
        )
    if spec.grounding is Grounding.TEXT_PLUS_IMAGE and not encoded_obs.image:
        raise ConfigError("TextPlusImage grounding needs a rendered image")


def build_agent_prompt(
    spec: RepresentationSpec,
    manual: str,
    encoded_obs: EncodedObservation,
    memory: TrajectoryMemory,
    action_labels: Sequence[str],
    *,
    family: str,
    window: int,
    oracle_map: str | None = None,
) -> PromptBundle:
    """x_t = [manual; observation + history; actions] for the acting agent.

    VoT grounding is routed to build_vot_prompt.
    """
    if spec.grounding is Grounding.TEXT_PLUS_VOT:
        return build_vot_prompt(
            spec, manual, encoded_obs, memory, action_labels,
            family=family, window=window, oracle_map=oracle_map,
        )
    _check(spec, encoded_obs, family)
    text = fill(
        TemplateId.AGENT,
        manual=manual,
        obs=encoded_obs.text,
        trajectory=_trajectory_block(spec, memory, window),
        question=question_text(action_labels),
    )
    image = encoded_obs.image if spec.grounding is Grounding.TEXT_PLUS_IMAGE else None
    return PromptBundle(text, TemplateId.AGENT, len(action_labels), image)


def build_vot_prompt(
    spec: RepresentationSpec,
    manual: str,
    encoded_obs: EncodedObservation,
    memory: TrajectoryMemory,
    action_labels: Sequence[str],
    *,
    family: str,
    window: int,
    oracle_map: str | None = None,
) -> PromptBundle:
    if spec.grounding is not Grounding.TEXT_PLUS_VOT:
        raise ConfigError("VoT prompt requires TextPlusVoT grounding")
    _check(spec, encoded_obs, family)
    slots = dict(
        manual=manual,
        obs=encoded_obs.text,
        trajectory=_trajectory_block(spec, memory, window),
        question=question_text(action_labels),
    )
    if spec.oracle_vot:
        if not oracle_map:
            raise ConfigError("OracleVoT requires the programmatic map")
        return PromptBundle(
            fill(TemplateId.AGENT_VOT_ORACLE, oracle_map=oracle_map, **slots),
            TemplateId.AGENT_VOT_ORACLE,
            len(action_labels),
        )
    return PromptBundle(fill(TemplateId.AGENT_VOT, **slots), TemplateId.AGENT_VOT, len(action_labels))


_ACTION = re.compile(r"Action\s*:\s*\**\s*[\[(]?\s*(\d+)")
_REASON = re.compile(r"Reason\s*:\s*\**\s*(.*)", re.DOTALL)


def parse_action(raw_reply: str, action_count: int) -> ParsedAction:
    """First "Action:" followed by an integer, e.g. "Action: [2] (Move North). Reason: ..."."""
    m = _ACTION.search(raw_reply)
    if m is None:
        raise ActionParseError("no 'Action: <number>' in reply", raw_reply)
    index = int(m.group(1))
    if not 1 <= index <= action_count:
        raise ActionParseError(f"action {index} outside 1..{action_count}", raw_reply)
    r = _REASON.search(raw_reply, m.end())
    reason = r.group(1).strip().split("\n")[0].strip() if r else ""
    return ParsedAction(index, reason, raw_reply)


def format_action(index: int, reason: str = "scripted.") -> str:
    return f"Action: {index}. Reason: {reason}"


def resolve_fallback(failure: ActionParseError, rng: np.random.Generator, action_count: int) -> ParsedAction:
    """Uniformly random legal action drawn from the episode's fallback stream."""
    index = int(rng.integers(1, action_count + 1))
    return ParsedAction(index, "fallback: unparseable reply", failure.raw_reply, fallback_used=True)


def choose_action(
    llm: Gateway, bundle: PromptBundle, rng: np.random.Generator
) -> tuple[ParsedAction, list[ModelReply]]:
    """Query, re-query once with the identical prompt on a bad reply, then fall back."""
    replies = []
    failure: ActionParseError | None = None
    for _ in range(2):
        reply = llm.chat(bundle)
        replies.append(reply)
        try:
            return parse_action(reply.text, bundle.action_count), replies
        except ActionParseError as exc:
            failure = exc
    assert failure is not None
    return resolve_fallback(failure, rng, bundle.action_count), replies
