"""Messenger: fetch the message, deliver it to the goal, avoid the enemy.

Coordinates are (row, col) with row growing southward and col eastward.
Entities are static within an episode.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from ..core import Difficulty, EnvSpec, Environment, EpisodeSeed, TerminationCause, derive_rng

GRID_SIZE = (10, 10)
MIN_SEPARATION = 2

# Nouns shown in observations, each with the aliases the manual may use for it.
VOCABULARY: dict[str, tuple[str, ...]] = {
    "airplane": ("aircraft", "jet"),
    "ball": ("orb", "sphere"),
    "bird": ("sparrow", "winged creature"),
    "dog": ("hound", "canine"),
    "fish": ("trout", "swimmer"),
    "knight": ("warrior", "paladin"),
    "mage": ("wizard", "sorcerer"),
    "queen": ("monarch", "ruler"),
    "robot": ("automaton", "machine"),
    "scientist": ("researcher", "professor"),
    "ship": ("vessel", "boat"),
    "sword": ("blade", "saber"),
}


class Role(str, enum.Enum):
    MESSAGE = "message"
    GOAL = "goal"
    ENEMY = "enemy"


class Move(enum.Enum):
    NORTH = (-1, 0)
    SOUTH = (1, 0)
    EAST = (0, 1)
    WEST = (0, -1)
    STAY = (0, 0)


ACTION_LABELS = ("Move North", "Move South", "Move East", "Move West", "Stay")
_MOVES = (Move.NORTH, Move.SOUTH, Move.EAST, Move.WEST, Move.STAY)

PICKUP_REWARD = 0.5
DELIVERY_REWARD = 0.5
DEATH_REWARD = -1.0


@dataclass(frozen=True)
class Entity:
    name: str
    role: Role
    pos: tuple[int, int]
    alias: str = ""


@dataclass(frozen=True)
class MessengerState:
    agent_pos: tuple[int, int]
    entities: tuple[Entity, ...]
    has_message: bool = False
    last_action: str | None = None
    grid_size: tuple[int, int] = GRID_SIZE

    def __post_init__(self) -> None:
        rows, cols = self.grid_size
        for r, c in [self.agent_pos, *(e.pos for e in self.entities)]:
            if not (0 <= r < rows and 0 <= c < cols):
                raise ValueError(f"position {(r, c)} outside {rows}x{cols} grid")
        roles = [e.role for e in self.entities]
        if len(set(roles)) != len(roles):
            raise ValueError("at most one entity per role")

    def entity(self, role: Role) -> Entity | None:
        return next((e for e in self.entities if e.role is role), None)

    def visible_entities(self) -> tuple[Entity, ...]:
        """Entities still on the board; a collected message is carried, not shown."""
        return tuple(e for e in self.entities if not (self.has_message and e.role is Role.MESSAGE))


@dataclass(frozen=True)
class EntityView:
    name: str
    alias: str
    role: Role
    pos: tuple[int, int]
    offset: tuple[int, int]

    @property
    def distance(self) -> int:
        return abs(self.offset[0]) + abs(self.offset[1])

    @property
    def direction(self) -> str:
        """Compass word for the offset, e.g. "northwest"; "" when co-located."""
        dr, dc = self.offset
        ns = "north" if dr < 0 else "south" if dr > 0 else ""
        ew = "west" if dc < 0 else "east" if dc > 0 else ""
        return ns + ew


@dataclass(frozen=True)
class MessengerObservation:
    agent_pos: tuple[int, int]
    has_message: bool
    last_action: str | None
    entities: tuple[EntityView, ...] = field(default_factory=tuple)
    grid_size: tuple[int, int] = GRID_SIZE


def synonym_table(seed: EpisodeSeed | np.random.Generator) -> dict[Role, tuple[str, str]]:
    """Assign each role a distinct (noun, alias) pair from the vocabulary."""
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed, "synonyms")
    nouns = sorted(VOCABULARY)
    picks = rng.choice(len(nouns), size=len(Role), replace=False)
    table = {}
    for role, idx in zip(Role, picks):
        noun = nouns[int(idx)]
        aliases = VOCABULARY[noun]
        table[role] = (noun, aliases[int(rng.integers(len(aliases)))])
    return table


def messenger_observe(state: MessengerState) -> MessengerObservation:
    ar, ac = state.agent_pos
    views = tuple(
        EntityView(e.name, e.alias, e.role, e.pos, (e.pos[0] - ar, e.pos[1] - ac))
        for e in state.visible_entities()
    )
    return MessengerObservation(state.agent_pos, state.has_message, state.last_action, views, state.grid_size)


def messenger_step(state: MessengerState, move: Move) -> tuple[MessengerState, float, TerminationCause]:
    rows, cols = state.grid_size
    r = min(max(state.agent_pos[0] + move.value[0], 0), rows - 1)
    c = min(max(state.agent_pos[1] + move.value[1], 0), cols - 1)
    label = ACTION_LABELS[_MOVES.index(move)]
    nxt = replace(state, agent_pos=(r, c), last_action=label)
    hit = next((e for e in nxt.visible_entities() if e.pos == (r, c)), None)
    if hit is None:
        return nxt, 0.0, TerminationCause.NONE
    if hit.role is Role.ENEMY:
        return nxt, DEATH_REWARD, TerminationCause.FAILURE
    if hit.role is Role.MESSAGE:
        return replace(nxt, has_message=True), PICKUP_REWARD, TerminationCause.NONE
    if nxt.has_message:
        return nxt, DELIVERY_REWARD, TerminationCause.GOAL_REACHED
    # reaching the goal empty-handed ends the episode, as in the original game
    return nxt, DEATH_REWARD, TerminationCause.FAILURE


def spawn(rng: np.random.Generator, table: dict[Role, tuple[str, str]]) -> MessengerState:
    rows, cols = GRID_SIZE
    while True:
        cells = rng.choice(rows * cols, size=1 + len(Role), replace=False)
        positions = [(int(k) // cols, int(k) % cols) for k in cells]
        if all(
            abs(a[0] - b[0]) + abs(a[1] - b[1]) >= MIN_SEPARATION
            for i, a in enumerate(positions)
            for b in positions[i + 1:]
        ):
            break
    entities = tuple(
        Entity(table[role][0], role, pos, table[role][1]) for role, pos in zip(Role, positions[1:])
    )
    return MessengerState(positions[0], entities)


MESSENGER_SPEC = EnvSpec(
    name="Messenger",
    action_labels=ACTION_LABELS,
    max_timesteps=10,
    history_window=10,
    difficulty=Difficulty.HARD,
    rollout=20,
)


class MessengerEnv(Environment):
    def __init__(self, spec: EnvSpec = MESSENGER_SPEC):
        super().__init__(spec)
        self.state: MessengerState | None = None
        self.synonyms: dict[Role, tuple[str, str]] = {}

    def _reset(self, rng: np.random.Generator) -> None:
        self.synonyms = synonym_table(rng)
        self.state = spawn(rng, self.synonyms)

    def set_state(self, state: MessengerState) -> None:
        self.state = state
        self.synonyms = {e.role: (e.name, e.alias) for e in state.entities}
        self.cumulative_reward = PICKUP_REWARD if state.has_message else 0.0

    def observe(self) -> MessengerObservation:
        assert self.state is not None
        return messenger_observe(self.state)

    def _apply(self, action: int) -> tuple[float, TerminationCause]:
        assert self.state is not None
        self.state, reward, cause = messenger_step(self.state, _MOVES[action])
        return reward, cause

    def _score(self) -> float:
        return min(max(self.cumulative_reward, 0.0), 1.0)
