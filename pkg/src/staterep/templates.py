"""Prompt template assets and the bundle handed to the model gateway."""

from __future__ import annotations

import enum
import hashlib
import string
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources


class TemplateId(str, enum.Enum):
    AGENT = "Agent"
    AGENT_VOT = "AgentVoT"
    AGENT_VOT_ORACLE = "AgentVoTOracle"
    SUMMARISER = "Summariser"


_FILES = {
    TemplateId.AGENT: "agent.txt",
    TemplateId.AGENT_VOT: "vot.txt",
    TemplateId.AGENT_VOT_ORACLE: "vot_oracle.txt",
    TemplateId.SUMMARISER: "summariser.txt",
}


@lru_cache(maxsize=None)
def load_template(template_id: TemplateId) -> str:
    path = resources.files("staterep").joinpath("assets", "templates", _FILES[template_id])
    return path.read_text(encoding="utf-8").rstrip("\n")


def placeholders(template_id: TemplateId) -> list[str]:
    return [name for _, name, _, _ in string.Formatter().parse(load_template(template_id)) if name]


def fill(template_id: TemplateId, **slots: str) -> str:
    """Fill every placeholder exactly once; trailing spaces are trimmed per line."""
    expected = set(placeholders(template_id))
    if set(slots) != expected:
        raise KeyError(f"{template_id.value} expects slots {sorted(expected)}, got {sorted(slots)}")
    text = load_template(template_id).format(**slots)
    return "\n".join(line.rstrip() for line in text.split("\n"))


@dataclass(frozen=True)
class PromptBundle:
    """Everything sent to the model for one call.

    The whole template travels as a single user message; system_text stays
    empty unless a caller sets it deliberately.
    """

    user_text: str
    template_id: TemplateId
    action_count: int = 0
    image: bytes | None = None
    system_text: str = ""

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.system_text.encode())
        h.update(b"\0")
        h.update(self.user_text.encode())
        if self.image is not None:
            h.update(b"\0")
            h.update(self.image)
        return h.hexdigest()
