"""Built-in scripted policies for the Mock backend.

Every policy is a pure function of the prompt bundle, except the scheduled
failure wrapper, which counts decisions and therefore hands each Gateway its
own fresh copy.
"""

from __future__ import annotations

import hashlib
import threading

from .core import ProtocolError
from .encoders.hanoi import HanoiParseError, decode_hanoi
from .encoders.spec import Structure
from .envs.hanoi import HanoiState, action_index, hanoi_optimal_policy
from .llm import register_mock_policy, summariser_reply
from .prompting import format_action
from .templates import PromptBundle, TemplateId

GIBBERISH = "I would rather describe the weather than pick a move."
OBS_MARKER = "Current observation: "
_HANOI_FORMATS = (Structure.TAGGED_LIST, Structure.DICT_LIST, Structure.MATRIX, Structure.NATURAL_LANGUAGE)


def current_observation(text: str) -> str:
    """The observation slot of an agent prompt (up to the next blank line)."""
    start = text.find(OBS_MARKER)
    if start < 0:
        raise ProtocolError("prompt has no 'Current observation:' slot")
    body = text[start + len(OBS_MARKER):]
    return body.split("\n\n", 1)[0]


def decode_any_hanoi(obs_text: str) -> HanoiState | None:
    for structure in _HANOI_FORMATS:
        try:
            return decode_hanoi(obs_text, structure)
        except (HanoiParseError, ValueError):
            continue
    return None


def optimal_policy(bundle: PromptBundle) -> str:
    """Optimal move for Hanoi prompts; action 1 for any other environment."""
    summary = summariser_reply(bundle)
    if summary is not None:
        return summary
    state = decode_any_hanoi(current_observation(bundle.user_text))
    move = hanoi_optimal_policy(state) if state is not None else None
    return format_action(action_index(*move) if move else 1)


def first_action_policy(bundle: PromptBundle) -> str:
    return summariser_reply(bundle) or format_action(1)


def gibberish_policy(bundle: PromptBundle) -> str:
    return GIBBERISH


def hashed_random_policy(bundle: PromptBundle) -> str:
    """Pseudo-random but reproducible: the action is a hash of the prompt."""
    summary = summariser_reply(bundle)
    if summary is not None:
        return summary
    value = int(hashlib.sha256(bundle.user_text.encode()).hexdigest(), 16)
    return format_action(value % bundle.action_count + 1)


def echo_policy(bundle: PromptBundle) -> str:
    if "Game Description:" not in bundle.user_text:
        raise ProtocolError("prompt lacks 'Game Description:'")
    return summariser_reply(bundle) or format_action(1, "echo.")


class ScheduledFailure:
    """Wraps a policy so every `period`-th agent decision is unparseable twice.

    The first reply of a scheduled decision and its identical re-query both
    come back as gibberish, forcing the fallback; summariser prompts pass
    straight through. Decisions are counted per instance, so run with
    parallelism 1 for an exact schedule.
    """

    def __init__(self, inner=first_action_policy, period: int = 5):
        if period < 1:
            raise ValueError("period must be >= 1")
        self.inner = inner
        self.period = period
        self.decisions = 0
        self.injected = 0
        self._pending_retry = False
        self._lock = threading.Lock()

    def fresh(self) -> ScheduledFailure:
        return ScheduledFailure(self.inner, self.period)

    def __call__(self, bundle: PromptBundle) -> str:
        if bundle.template_id is TemplateId.SUMMARISER:
            return self.inner(bundle)
        with self._lock:
            if self._pending_retry:
                self._pending_retry = False
                return GIBBERISH
            self.decisions += 1
            if self.decisions % self.period == 0:
                self.injected += 1
                self._pending_retry = True
                return GIBBERISH
        return self.inner(bundle)


BUILTIN = {
    "optimal": optimal_policy,
    "first": first_action_policy,
    "gibberish": gibberish_policy,
    "random": hashed_random_policy,
    "echo": echo_policy,
    "flaky": ScheduledFailure(first_action_policy, 5),
}

for _name, _policy in BUILTIN.items():
    register_mock_policy(_name, _policy)
