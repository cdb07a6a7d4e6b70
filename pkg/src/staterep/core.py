"""Episode contract shared by every environment family, plus seeding."""

from __future__ import annotations

import enum
import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np


class StateRepError(Exception):
    """Base class for all harness errors."""


class ConfigError(StateRepError):
    """Invalid configuration (unknown environment, bad representation, ...)."""


class ProtocolError(StateRepError):
    """A caller violated an interface contract, e.g. an out-of-range action."""


class EpisodeStateError(StateRepError):
    """Operation not allowed in the episode's current state."""


class Difficulty(str, enum.Enum):
    EASY = "Easy"
    MEDIUM = "Medium"
    HARD = "Hard"


class TerminationCause(str, enum.Enum):
    GOAL_REACHED = "GoalReached"
    FAILURE = "Failure"
    TIMEOUT = "Timeout"
    NONE = "None"


@dataclass(frozen=True)
class EnvSpec:
    name: str
    action_labels: tuple[str, ...]
    max_timesteps: int
    history_window: int
    difficulty: Difficulty
    rollout: int = 10

    def __post_init__(self) -> None:
        if not self.action_labels:
            raise ConfigError(f"{self.name}: action_labels must be non-empty")
        if len(set(self.action_labels)) != len(self.action_labels):
            raise ConfigError(f"{self.name}: duplicate action labels")
        if self.max_timesteps < 1 or self.history_window < 1 or self.rollout < 1:
            raise ConfigError(f"{self.name}: max_timesteps, history_window and rollout must be >= 1")

    @property
    def action_count(self) -> int:
        return len(self.action_labels)


@dataclass(frozen=True)
class StepOutcome:
    observation: Any
    reward: float
    terminal: bool
    termination_cause: TerminationCause = TerminationCause.NONE

    def __post_init__(self) -> None:
        if self.terminal != (self.termination_cause is not TerminationCause.NONE):
            raise ValueError("terminal must be true iff termination_cause is not None")


@dataclass(frozen=True)
class EpisodeSeed:
    run_seed: int
    episode_index: int

    def __post_init__(self) -> None:
        if not 0 <= self.run_seed < 2**64:
            raise ConfigError("run_seed must be a 64-bit unsigned integer")
        if self.episode_index < 0:
            raise ConfigError("episode_index must be non-negative")


def derive_rng(seed: EpisodeSeed, stream: str) -> np.random.Generator:
    """Counter-based generator keyed by (run_seed, episode_index, stream).

    Separate named streams keep environment dynamics independent of, say,
    fallback draws made by the agent loop.
    """
    digest = hashlib.sha256(f"{seed.run_seed}:{seed.episode_index}:{stream}".encode()).digest()
    return np.random.Generator(np.random.Philox(key=int.from_bytes(digest[:16], "little")))


class Environment(ABC):
    """One episode at a time; subclasses supply the family dynamics.

    Instances are not thread-safe but own no shared state, so distinct
    instances may run concurrently.
    """

    spec: EnvSpec

    def __init__(self, spec: EnvSpec):
        self.spec = spec
        self.timestep = 0
        self.cumulative_reward = 0.0
        self.termination_cause: TerminationCause | None = None
        self.seed: EpisodeSeed | None = None

    @property
    def active(self) -> bool:
        return self.timestep >= 1 and self.termination_cause is TerminationCause.NONE

    @property
    def terminal(self) -> bool:
        return self.termination_cause not in (None, TerminationCause.NONE)

    def reset(self, seed: EpisodeSeed) -> Any:
        self.seed = seed
        self.timestep = 1
        self.cumulative_reward = 0.0
        self.termination_cause = TerminationCause.NONE
        self._reset(derive_rng(seed, "env"))
        return self.observe()

    def step(self, action_index: int) -> StepOutcome:
        if self.timestep < 1:
            raise EpisodeStateError("step() called before reset()")
        if self.terminal:
            raise EpisodeStateError("episode already terminated")
        if isinstance(action_index, bool) or not isinstance(action_index, (int, np.integer)):
            raise ProtocolError(f"action index must be an integer, got {action_index!r}")
        if not 1 <= action_index <= self.spec.action_count:
            raise ProtocolError(
                f"action index {action_index} outside 1..{self.spec.action_count}"
            )
        reward, cause = self._apply(int(action_index) - 1)
        self.cumulative_reward += reward
        self.timestep += 1
        if cause is TerminationCause.NONE and self.timestep > self.spec.max_timesteps:
            cause = TerminationCause.TIMEOUT
        self.termination_cause = cause
        return StepOutcome(self.observe(), reward, cause is not TerminationCause.NONE, cause)

    def normalized_score(self) -> float:
        if not self.terminal:
            raise EpisodeStateError("normalized_score() requires a terminal episode")
        return self._score()

    @abstractmethod
    def observe(self) -> Any:
        """Ground-truth observation payload for the current state."""

    @abstractmethod
    def _reset(self, rng: np.random.Generator) -> None: ...

    @abstractmethod
    def _apply(self, action: int) -> tuple[float, TerminationCause]:
        """Apply 0-based action; return (reward, termination cause or NONE)."""

    @abstractmethod
    def _score(self) -> float: ...


_REGISTRY: dict[str, tuple[EnvSpec, Callable[[EnvSpec], Environment]]] = {}


def register_env(spec: EnvSpec, factory: Callable[[EnvSpec], Environment]) -> None:
    key = spec.name.lower()
    if key in _REGISTRY:
        raise ConfigError(f"environment {spec.name!r} already registered")
    _REGISTRY[key] = (spec, factory)


def _ensure_builtin() -> None:
    # importing the families registers them
    from . import envs  # noqa: F401


def env_spec(name: str) -> EnvSpec:
    _ensure_builtin()
    try:
        return _REGISTRY[name.lower()][0]
    except KeyError:
        raise ConfigError(f"unknown environment {name!r}; known: {sorted(_REGISTRY)}") from None


def registered_specs() -> list[EnvSpec]:
    _ensure_builtin()
    return [spec for spec, _ in _REGISTRY.values()]


def make_env(name: str | EnvSpec) -> Environment:
    key = name.name if isinstance(name, EnvSpec) else name
    spec = env_spec(key)
    return _REGISTRY[spec.name.lower()][1](spec)


def reset(spec: str | EnvSpec, seed: EpisodeSeed) -> tuple[Environment, Any]:
    """Build a fresh environment and reset it; returns (env, observation)."""
    env = make_env(spec)
    return env, env.reset(seed)
