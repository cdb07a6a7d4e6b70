"""Tower of Hanoi with three pegs.

Disk ids run 0..n-1 with 0 the smallest. Each peg is stored bottom to top,
so a valid stack is strictly decreasing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from ..core import Difficulty, EnvSpec, Environment, StateRepError, TerminationCause

PEGS = ("A", "B", "C")
MOVES: tuple[tuple[str, str], ...] = tuple(permutations(PEGS, 2))  # AB AC BA BC CA CB


class IllegalReason(str, enum.Enum):
    EMPTY_SOURCE = "EmptySource"
    LARGER_ON_SMALLER = "LargerOnSmaller"


class IllegalMove(StateRepError):
    def __init__(self, reason: IllegalReason, src: str, dst: str):
        super().__init__(f"illegal move {src}->{dst}: {reason.value}")
        self.reason = reason


@dataclass(frozen=True)
class HanoiState:
    pegs: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]
    n_disks: int = 3
    goal_peg: str = "C"

    def __post_init__(self) -> None:
        if len(self.pegs) != 3:
            raise ValueError("exactly three pegs")
        disks = sorted(d for peg in self.pegs for d in peg)
        if disks != list(range(self.n_disks)):
            raise ValueError(f"every disk 0..{self.n_disks - 1} must appear exactly once")
        for peg in self.pegs:
            if any(lo <= hi for lo, hi in zip(peg, peg[1:])):
                raise ValueError(f"stack {list(peg)} is not strictly decreasing bottom to top")
        if self.goal_peg not in PEGS:
            raise ValueError(f"unknown goal peg {self.goal_peg!r}")

    @classmethod
    def initial(cls, n_disks: int = 3, goal_peg: str = "C") -> HanoiState:
        return cls((tuple(range(n_disks - 1, -1, -1)), (), ()), n_disks, goal_peg)

    @classmethod
    def from_dict(cls, pegs: dict[str, list[int]], goal_peg: str = "C") -> HanoiState:
        stacks = tuple(tuple(pegs.get(p, ())) for p in PEGS)
        return cls(stacks, sum(len(s) for s in stacks), goal_peg)  # type: ignore[arg-type]

    def peg(self, label: str) -> tuple[int, ...]:
        return self.pegs[PEGS.index(label)]

    def as_dict(self) -> dict[str, list[int]]:
        return {label: list(stack) for label, stack in zip(PEGS, self.pegs)}

    def disk_positions(self) -> list[str]:
        where = [""] * self.n_disks
        for label, stack in zip(PEGS, self.pegs):
            for d in stack:
                where[d] = label
        return where

    @property
    def placed(self) -> int:
        """Disks correctly seated on the goal peg, counted from the largest up."""
        count = 0
        for expected, disk in zip(range(self.n_disks - 1, -1, -1), self.peg(self.goal_peg)):
            if disk != expected:
                break
            count += 1
        return count

    @property
    def solved(self) -> bool:
        return self.placed == self.n_disks


def hanoi_apply(state: HanoiState, src: str, dst: str) -> HanoiState:
    if src == dst:
        raise ValueError("source and destination pegs must differ")
    source, target = state.peg(src), state.peg(dst)
    if not source:
        raise IllegalMove(IllegalReason.EMPTY_SOURCE, src, dst)
    if target and target[-1] < source[-1]:
        raise IllegalMove(IllegalReason.LARGER_ON_SMALLER, src, dst)
    pegs = [list(p) for p in state.pegs]
    pegs[PEGS.index(dst)].append(pegs[PEGS.index(src)].pop())
    return HanoiState(tuple(tuple(p) for p in pegs), state.n_disks, state.goal_peg)  # type: ignore[arg-type]


def all_states(n_disks: int = 3, goal_peg: str = "C") -> list[HanoiState]:
    """Every legal configuration (3**n of them), in a fixed order."""
    out = []
    for code in range(3**n_disks):
        pegs: list[list[int]] = [[], [], []]
        for disk in range(n_disks - 1, -1, -1):
            pegs[(code // 3**disk) % 3].append(disk)
        out.append(HanoiState(tuple(tuple(p) for p in pegs), n_disks, goal_peg))  # type: ignore[arg-type]
    return out


def _first_move(where: list[str], k: int, target: str) -> tuple[str, str] | None:
    while k >= 0 and where[k] == target:
        k -= 1
    if k < 0:
        return None
    src = where[k]
    spare = next(p for p in PEGS if p not in (src, target))
    return _first_move(where, k - 1, spare) or (src, target)


def hanoi_optimal_policy(state: HanoiState) -> tuple[str, str] | None:
    """Next move of the recursive solution, or None when already solved."""
    return _first_move(state.disk_positions(), state.n_disks - 1, state.goal_peg)


HANOI_SPEC = EnvSpec(
    name="Hanoi",
    action_labels=tuple(f"move disk from {a} to {b}" for a, b in MOVES),
    max_timesteps=30,
    history_window=30,
    difficulty=Difficulty.MEDIUM,
    rollout=10,
)


class HanoiEnv(Environment):
    """Illegal moves consume a timestep with zero reward; the episode goes on.

    Reward is the change in correctly placed disks, so the cumulative reward
    divided by the disk count is the normalized score.
    """

    def __init__(self, spec: EnvSpec = HANOI_SPEC, n_disks: int = 3):
        super().__init__(spec)
        self.n_disks = n_disks
        self.state = HanoiState.initial(n_disks)
        self.last_illegal: IllegalReason | None = None

    def _reset(self, rng: np.random.Generator) -> None:
        # the start configuration is fixed; rng is unused by design
        self.state = HanoiState.initial(self.n_disks)
        self.last_illegal = None

    def observe(self) -> HanoiState:
        return self.state

    def _apply(self, action: int) -> tuple[float, TerminationCause]:
        src, dst = MOVES[action]
        before = self.state.placed
        try:
            self.state = hanoi_apply(self.state, src, dst)
            self.last_illegal = None
        except IllegalMove as exc:
            self.last_illegal = exc.reason
            return 0.0, TerminationCause.NONE
        reward = float(self.state.placed - before)
        if self.state.solved:
            return reward, TerminationCause.GOAL_REACHED
        return reward, TerminationCause.NONE

    def _score(self) -> float:
        return self.cumulative_reward / self.n_disks

    def set_state(self, state: HanoiState) -> None:
        """Place the episode in an arbitrary configuration (tests, scenarios)."""
        self.state = state
        self.n_disks = state.n_disks
        self.cumulative_reward = float(state.placed)


def action_index(src: str, dst: str) -> int:
    """1-based action index for a peg-to-peg move."""
    return MOVES.index((src, dst)) + 1
