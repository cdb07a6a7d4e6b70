"""MiniGrid-style instruction-following rooms (GoTo, Open, Pickup, PutNext, PickUpSeqGoTo).

Layouts are indexed [row][col]; headings are compass directions with north
pointing to row 0. The agent sees a 7x7 egocentric window ahead of itself
with wall occlusion.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from ..core import Difficulty, EnvSpec, Environment, TerminationCause

KINDS = ("ball", "box", "key")
COLORS = ("red", "green", "blue", "purple", "yellow", "grey")
VIEW_SIZE = 7
ROOM_SIZE = 8


class Heading(enum.IntEnum):
    NORTH = 0
    EAST = 1
    SOUTH = 2
    WEST = 3

    @property
    def vector(self) -> tuple[int, int]:
        return ((-1, 0), (0, 1), (1, 0), (0, -1))[self]

    @property
    def right(self) -> Heading:
        return Heading((self + 1) % 4)

    @property
    def left(self) -> Heading:
        return Heading((self - 1) % 4)

    @property
    def word(self) -> str:
        return self.name.lower()


class Action(enum.IntEnum):
    TURN_LEFT = 0
    TURN_RIGHT = 1
    FORWARD = 2
    PICKUP = 3
    DROP = 4
    TOGGLE = 5


ACTION_LABELS = ("turn left", "turn right", "go forward", "pick up", "drop", "toggle")


class Wall:
    _instance: Wall | None = None

    def __new__(cls) -> Wall:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "WALL"

    def __reduce__(self) -> str:
        return "WALL"


WALL = Wall()


class Unseen:
    """Marker for cells of the view window hidden by occlusion."""

    _instance: Unseen | None = None

    def __new__(cls) -> Unseen:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNSEEN"

    def __reduce__(self) -> str:
        return "UNSEEN"


UNSEEN = Unseen()


@dataclass(frozen=True)
class Obj:
    kind: str
    color: str

    def describe(self) -> str:
        return f"{self.color} {self.kind}"


@dataclass(frozen=True)
class Door:
    color: str
    state: str = "closed"  # open | closed | locked

    @property
    def is_open(self) -> bool:
        return self.state == "open"

    def describe(self) -> str:
        return f"{self.state} {self.color} door"


Cell = Union[None, Wall, Door, Obj]


def passable(cell: Cell) -> bool:
    return cell is None or (isinstance(cell, Door) and cell.is_open)


def transparent(cell: object) -> bool:
    return not (cell is WALL or (isinstance(cell, Door) and not cell.is_open))


class Task(str, enum.Enum):
    GOTO = "GoTo"
    OPEN = "Open"
    PICKUP = "Pickup"
    PUT_NEXT = "PutNext"
    PICKUP_SEQ_GOTO = "PickUpSeqGoTo"

    @property
    def arity(self) -> int:
        return 2 if self in (Task.PUT_NEXT, Task.PICKUP_SEQ_GOTO) else 1


@dataclass(frozen=True)
class MissionSpec:
    task: Task
    referents: tuple[tuple[str, str], ...]  # (kind, color); kind may be "door"

    def __post_init__(self) -> None:
        if len(self.referents) != self.task.arity:
            raise ValueError(f"{self.task.value} takes {self.task.arity} referent(s)")

    @property
    def mission_text(self) -> str:
        (k1, c1), *rest = self.referents
        if self.task is Task.GOTO:
            return f"go to the {c1} {k1}"
        if self.task is Task.OPEN:
            return f"open the {c1} {k1}"
        if self.task is Task.PICKUP:
            return f"pick up the {c1} {k1}"
        k2, c2 = rest[0]
        if self.task is Task.PUT_NEXT:
            return f"put the {c1} {k1} next to the {c2} {k2}"
        return f"pick up the {c1} {k1}, then go to the {c2} {k2}"


def _matches(cell: object, ref: tuple[str, str]) -> bool:
    kind, color = ref
    if isinstance(cell, Obj):
        return (cell.kind, cell.color) == ref
    if isinstance(cell, Door):
        return kind == "door" and cell.color == color
    return False


@dataclass(frozen=True)
class GridWorldState:
    layout: tuple[tuple[Cell, ...], ...]
    agent_pos: tuple[int, int]
    heading: Heading
    mission: MissionSpec
    carrying: Obj | None = None
    stage: int = 0  # PickUpSeqGoTo: 1 once the first referent has been picked up

    def __post_init__(self) -> None:
        r, c = self.agent_pos
        if not passable(self.layout[r][c]):
            raise ValueError("agent must stand on a passable cell")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.layout), len(self.layout[0])

    def cell(self, pos: tuple[int, int]) -> Cell:
        r, c = pos
        rows, cols = self.shape
        if not (0 <= r < rows and 0 <= c < cols):
            return WALL
        return self.layout[r][c]

    @property
    def front(self) -> tuple[int, int]:
        dr, dc = self.heading.vector
        return self.agent_pos[0] + dr, self.agent_pos[1] + dc

    def with_cell(self, pos: tuple[int, int], value: Cell) -> GridWorldState:
        rows = [list(row) for row in self.layout]
        rows[pos[0]][pos[1]] = value
        return replace(self, layout=tuple(tuple(row) for row in rows))


def mission_success(state: GridWorldState) -> bool:
    mission = state.mission
    ref = mission.referents[0]
    if mission.task is Task.GOTO:
        return _matches(state.cell(state.front), ref)
    if mission.task is Task.OPEN:
        return any(
            isinstance(cell, Door) and cell.is_open and _matches(cell, ref)
            for row in state.layout
            for cell in row
        )
    if mission.task is Task.PICKUP:
        return state.carrying is not None and _matches(state.carrying, ref)
    if mission.task is Task.PUT_NEXT:
        rows, cols = state.shape
        for r in range(rows):
            for c in range(cols):
                if _matches(state.layout[r][c], ref):
                    neighbours = ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1))
                    if any(_matches(state.cell(p), mission.referents[1]) for p in neighbours):
                        return True
        return False
    return state.stage >= 1 and _matches(state.cell(state.front), mission.referents[1])


def grid_step(state: GridWorldState, action: Action) -> tuple[GridWorldState, float, TerminationCause]:
    """Infeasible interactions are no-ops that still consume the timestep."""
    front = state.front
    ahead = state.cell(front)
    nxt = state
    if action is Action.TURN_LEFT:
        nxt = replace(state, heading=state.heading.left)
    elif action is Action.TURN_RIGHT:
        nxt = replace(state, heading=state.heading.right)
    elif action is Action.FORWARD:
        if passable(ahead):
            nxt = replace(state, agent_pos=front)
    elif action is Action.PICKUP:
        if isinstance(ahead, Obj) and state.carrying is None:
            nxt = replace(state.with_cell(front, None), carrying=ahead)
    elif action is Action.DROP:
        if state.carrying is not None and ahead is None:
            nxt = replace(state.with_cell(front, state.carrying), carrying=None)
    elif action is Action.TOGGLE:
        if isinstance(ahead, Door):
            if ahead.state == "open":
                nxt = state.with_cell(front, Door(ahead.color, "closed"))
            elif ahead.state == "closed":
                nxt = state.with_cell(front, Door(ahead.color, "open"))
            elif isinstance(state.carrying, Obj) and state.carrying.kind == "key" and state.carrying.color == ahead.color:
                nxt = state.with_cell(front, Door(ahead.color, "open"))
    if (
        nxt.mission.task is Task.PICKUP_SEQ_GOTO
        and nxt.stage == 0
        and nxt.carrying is not None
        and _matches(nxt.carrying, nxt.mission.referents[0])
    ):
        nxt = replace(nxt, stage=1)
    if mission_success(nxt):
        return nxt, 1.0, TerminationCause.GOAL_REACHED
    return nxt, 0.0, TerminationCause.NONE


@dataclass(frozen=True)
class GridObservation:
    """Egocentric view: row 0 is farthest ahead, the agent sits at (6, 3) facing up."""

    view: tuple[tuple[object, ...], ...]
    heading: Heading
    carrying: Obj | None
    mission_text: str

    @property
    def agent_cell(self) -> tuple[int, int]:
        return VIEW_SIZE - 1, VIEW_SIZE // 2


def view_to_world(state: GridWorldState, vrow: int, vcol: int) -> tuple[int, int]:
    forward = VIEW_SIZE - 1 - vrow
    lateral = vcol - VIEW_SIZE // 2
    fr, fc = state.heading.vector
    rr, rc = state.heading.right.vector
    return (
        state.agent_pos[0] + fr * forward + rr * lateral,
        state.agent_pos[1] + fc * forward + rc * lateral,
    )


def visibility_mask(view: list[list[object]]) -> list[list[bool]]:
    """Propagate sight outward from the agent, row by row away from it.

    Opaque cells (walls, closed doors) are themselves visible but stop
    propagation past them.
    """
    size = len(view)
    mask = [[False] * size for _ in range(size)]
    mask[size - 1][size // 2] = True
    for j in range(size - 1, -1, -1):
        for i in range(size - 1):
            if not mask[j][i] or not transparent(view[j][i]):
                continue
            mask[j][i + 1] = True
            if j > 0:
                mask[j - 1][i + 1] = True
                mask[j - 1][i] = True
        for i in range(size - 1, 0, -1):
            if not mask[j][i] or not transparent(view[j][i]):
                continue
            mask[j][i - 1] = True
            if j > 0:
                mask[j - 1][i - 1] = True
                mask[j - 1][i] = True
    return mask


def grid_observe(state: GridWorldState) -> GridObservation:
    raw = [
        [state.cell(view_to_world(state, j, i)) for i in range(VIEW_SIZE)]
        for j in range(VIEW_SIZE)
    ]
    mask = visibility_mask(raw)
    view = tuple(
        tuple(raw[j][i] if mask[j][i] else UNSEEN for i in range(VIEW_SIZE))
        for j in range(VIEW_SIZE)
    )
    return GridObservation(view, state.heading, state.carrying, state.mission.mission_text)


def _room(rows: int, cols: int) -> list[list[Cell]]:
    return [
        [WALL if r in (0, rows - 1) or c in (0, cols - 1) else None for c in range(cols)]
        for r in range(rows)
    ]


def generate(task: Task, rng: np.random.Generator) -> GridWorldState:
    """Seeded layout: one 8x8 room, or two rooms joined by a door for Open."""
    if task is Task.OPEN:
        layout = _room(ROOM_SIZE, 2 * ROOM_SIZE - 1)
        split = ROOM_SIZE - 1
        for r in range(ROOM_SIZE):
            layout[r][split] = WALL
        door_row = int(rng.integers(1, ROOM_SIZE - 1))
        door_color = COLORS[int(rng.integers(len(COLORS)))]
        layout[door_row][split] = Door(door_color, "closed")
        n_objects = 2
    else:
        layout = _room(ROOM_SIZE, ROOM_SIZE)
        n_objects = 4

    combos = [(k, c) for k in KINDS for c in COLORS]
    picks = rng.choice(len(combos), size=n_objects, replace=False)
    objects = [Obj(*combos[int(i)]) for i in picks]

    free = [(r, c) for r, row in enumerate(layout) for c, cell in enumerate(row) if cell is None]
    while True:
        cells = rng.choice(len(free), size=n_objects + 1, replace=False)
        spots = [free[int(i)] for i in cells]
        if task is not Task.PUT_NEXT:
            break
        (r1, c1), (r2, c2) = spots[1], spots[2]
        if abs(r1 - r2) + abs(c1 - c2) > 1:
            break
    for obj, (r, c) in zip(objects, spots[1:]):
        layout[r][c] = obj

    if task is Task.OPEN:
        referents: tuple[tuple[str, str], ...] = (("door", door_color),)
    else:
        referents = tuple((o.kind, o.color) for o in objects[: task.arity])
    heading = Heading(int(rng.integers(4)))
    state = GridWorldState(
        tuple(tuple(row) for row in layout), spots[0], heading, MissionSpec(task, referents)
    )
    if mission_success(state):
        # never start already solved: turn away from the target
        state = replace(state, heading=state.heading.right.right)
    return state


_TASK_SPECS = (
    (Task.GOTO, "BabyAI-Goto", Difficulty.EASY),
    (Task.OPEN, "BabyAI-Open", Difficulty.MEDIUM),
    (Task.PICKUP, "BabyAI-Pickup", Difficulty.MEDIUM),
    (Task.PICKUP_SEQ_GOTO, "BabyAI-PickUpSeqGoTo", Difficulty.HARD),
    (Task.PUT_NEXT, "BabyAI-Putnext", Difficulty.HARD),
)

GRID_SPECS: dict[Task, EnvSpec] = {
    task: EnvSpec(
        name=name,
        action_labels=ACTION_LABELS,
        max_timesteps=128,
        history_window=128,
        difficulty=difficulty,
        rollout=10,
    )
    for task, name, difficulty in _TASK_SPECS
}


class GridEnv(Environment):
    """Binary success: reward 1 and termination the moment the mission holds."""

    def __init__(self, spec: EnvSpec, task: Task):
        super().__init__(spec)
        self.task = task
        self.state: GridWorldState | None = None

    def _reset(self, rng: np.random.Generator) -> None:
        self.state = generate(self.task, rng)

    def set_state(self, state: GridWorldState) -> None:
        self.state = state

    def observe(self) -> GridObservation:
        assert self.state is not None
        return grid_observe(self.state)

    def _apply(self, action: int) -> tuple[float, TerminationCause]:
        assert self.state is not None
        self.state, reward, cause = grid_step(self.state, Action(action))
        return reward, cause

    def _score(self) -> float:
        return 1.0 if self.termination_cause is TerminationCause.GOAL_REACHED else 0.0
