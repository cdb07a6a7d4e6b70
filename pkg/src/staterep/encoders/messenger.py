"""Messenger observation renderings: plain, positional, coordinate block, symbolic grid."""

from __future__ import annotations

from ..envs.messenger import EntityView, MessengerObservation, Role
from .spec import Structure

ROLE_GLYPHS = {Role.ENEMY: "E", Role.MESSAGE: "M", Role.GOAL: "G"}


def _steps(n: int) -> str:
    return f"{n} step" if n == 1 else f"{n} steps"


def _possession(obs: MessengerObservation) -> str:
    if obs.has_message:
        return "You (agent) already have the message."
    return "You (agent) don't have the message."


def _header(obs: MessengerObservation) -> list[str]:
    lines = [f"You took action {obs.last_action}."] if obs.last_action else []
    lines.append(_possession(obs))
    return lines


def _article(word: str) -> str:
    return "an" if word[:1] in "aeiou" else "a"


def _directional(e: EntityView) -> str:
    if e.distance == 0:
        return f"{e.name} at your position"
    return f"{e.name} {e.distance} steps to your {e.direction}"


def natural_language(obs: MessengerObservation) -> str:
    lines = _header(obs) + ["You see:"]
    lines += [f"- {e.name} {_steps(e.distance)} away" for e in obs.entities]
    return "\n".join(lines)


def directional_view(obs: MessengerObservation) -> str:
    lines = _header(obs) + ["", "You see:"]
    lines += [f"- {_directional(e)}" for e in obs.entities]
    return "\n".join(lines)


def natural_language_pos(obs: MessengerObservation) -> str:
    who = "with" if obs.has_message else "without"
    r, c = obs.agent_pos
    seen = [
        f"{_article(e.name)} {e.name} at your position" if e.distance == 0
        else f"{_article(e.name)} {e.name} {e.distance} steps to the {e.direction}"
        for e in obs.entities
    ]
    seen_text = ", ".join(seen) if seen else "nothing"
    return f"You are an agent {who} the message. You are currently in position {r}, {c}. You can see {seen_text}."


def coordinates(obs: MessengerObservation) -> str:
    counts: dict[str, int] = {}
    lines = ["COORDINATE SYSTEM:", f"Agent: ({obs.agent_pos[0]}, {obs.agent_pos[1]})", "Entities:"]
    for e in obs.entities:
        idx = counts.get(e.name, 0)
        counts[e.name] = idx + 1
        lines.append(f"  {e.name}_{idx}: ({e.pos[0]}, {e.pos[1]})")
    lines += ["", "Original View:", directional_view(obs)]
    return "\n".join(lines)


def symbolic(obs: MessengerObservation) -> str:
    rows, cols = obs.grid_size
    grid = [["."] * cols for _ in range(rows)]
    for e in obs.entities:
        grid[e.pos[0]][e.pos[1]] = ROLE_GLYPHS[e.role]
    grid[obs.agent_pos[0]][obs.agent_pos[1]] = "P" if obs.has_message else "A"
    lines = ["".join(row) for row in grid]
    lines += ["Legend:", "A=agent(no msg)", "P=agent(with msg)", ".=empty", "Entities:"]
    by_role = {e.role: e for e in obs.entities}
    for role in (Role.ENEMY, Role.MESSAGE, Role.GOAL):
        if role in by_role:
            lines.append(f"  {ROLE_GLYPHS[role]}={by_role[role].name}")
    return "\n".join(lines)


_ENCODERS = {
    Structure.NATURAL_LANGUAGE: natural_language,
    Structure.NATURAL_LANGUAGE_POS: natural_language_pos,
    Structure.COORDINATES: coordinates,
    Structure.SYMBOLIC: symbolic,
}


def encode_messenger(obs: MessengerObservation, structure: Structure | str) -> str:
    structure = Structure(structure)
    try:
        return _ENCODERS[structure](obs)
    except KeyError:
        raise ValueError(f"{structure.value} is not a Messenger structure") from None
