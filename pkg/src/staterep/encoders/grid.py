from __future__ import annotations

from ..envs.gridworld import VIEW_SIZE, WALL, Door, GridObservation, Obj


def _steps(n: int, word: str) -> str:
    return f"{n} step {word}" if n == 1 else f"{n} steps {word}"


def relative_phrase(forward: int, lateral: int) -> str:
    """"2 steps forward", "1 step left", "3 steps forward and 1 step right"."""
    parts = []
    if forward > 0:
        parts.append(_steps(forward, "forward"))
    elif forward < 0:
        parts.append(_steps(-forward, "behind"))
    if lateral:
        parts.append(_steps(abs(lateral), "right" if lateral > 0 else "left"))
    return " and ".join(parts) if parts else "here"


def _article(thing: Obj | Door) -> str:
    return f"a {thing.describe()}"


def visible_things(obs: GridObservation) -> list[tuple[int, int, Obj | Door]]:
    """(forward, lateral, thing) for every object or door in view, nearest first."""
    ar, ac = obs.agent_cell
    found = []
    for j, row in enumerate(obs.view):
        for i, cell in enumerate(row):
            if (j, i) == (ar, ac) or not isinstance(cell, (Obj, Door)):
                continue
            found.append((ar - j, i - ac, cell))
    found.sort(key=lambda t: (t[0] + abs(t[1]), t[0], t[1]))
    return found


def encode_grid(obs: GridObservation) -> str:
    ahead = obs.view[VIEW_SIZE - 2][VIEW_SIZE // 2]
    if ahead is WALL:
        front = "a wall"
    elif isinstance(ahead, (Obj, Door)):
        front = _article(ahead)
    else:
        front = "empty floor"
    carrying = (
        f"You are carrying {_article(obs.carrying)}." if obs.carrying else "You are not carrying anything."
    )
    lines = [
        f"Mission: {obs.mission_text}",
        f"You are facing {obs.heading.word}.",
        carrying,
        f"In front of you: {front}.",
    ]
    things = visible_things(obs)
    if not things:
        lines.append("You see: nothing visible")
    else:
        lines.append("You see:")
        lines += [f"- {_article(t)} {relative_phrase(f, l)}" for f, l, t in things]
    return "\n".join(lines)
