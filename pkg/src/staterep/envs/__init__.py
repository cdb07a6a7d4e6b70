"""Built-in environment families; importing this package registers them."""

from __future__ import annotations

from functools import partial
from importlib import resources

from ..core import ConfigError, register_env
from .gridworld import GRID_SPECS, GridEnv, GridWorldState, Task
from .hanoi import HANOI_SPEC, HanoiEnv, HanoiState
from .messenger import MESSENGER_SPEC, MessengerEnv, MessengerState, Role

register_env(HANOI_SPEC, HanoiEnv)
register_env(MESSENGER_SPEC, MessengerEnv)
for _task, _spec in GRID_SPECS.items():
    register_env(_spec, partial(GridEnv, task=_task))


def family(env_name: str) -> str:
    """Map an environment name to its family: hanoi, messenger or grid."""
    key = env_name.lower()
    if key == "hanoi":
        return "hanoi"
    if key == "messenger":
        return "messenger"
    if key.startswith("babyai"):
        return "grid"
    raise ConfigError(f"unknown environment {env_name!r}")


def _asset(name: str) -> str:
    return resources.files("staterep").joinpath("assets", "manuals", name).read_text(encoding="utf-8").rstrip("\n")


def manual_for(env) -> str:
    """Static task description for an environment instance (after reset)."""
    fam = family(env.spec.name)
    if fam == "hanoi":
        return _asset("hanoi.txt")
    if fam == "messenger":
        aliases = {role: pair[1] for role, pair in env.synonyms.items()}
        return _asset("messenger.txt").format(
            message_alias=aliases[Role.MESSAGE],
            goal_alias=aliases[Role.GOAL],
            enemy_alias=aliases[Role.ENEMY],
        )
    return _asset("babyai.txt")


__all__ = [
    "GRID_SPECS",
    "GridEnv",
    "GridWorldState",
    "HANOI_SPEC",
    "HanoiEnv",
    "HanoiState",
    "MESSENGER_SPEC",
    "MessengerEnv",
    "MessengerState",
    "family",
    "manual_for",
]
