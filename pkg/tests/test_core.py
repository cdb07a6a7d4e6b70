from __future__ import annotations

import numpy as np
import pytest

from staterep.core import (
    ConfigError,
    Difficulty,
    EnvSpec,
    EpisodeSeed,
    EpisodeStateError,
    ProtocolError,
    StepOutcome,
    TerminationCause,
    derive_rng,
    env_spec,
    make_env,
    register_env,
    registered_specs,
    reset,
)
from staterep.envs.hanoi import HanoiEnv, action_index


def test_envspec_rejects_empty_or_duplicate_actions():
    with pytest.raises(ConfigError):
        EnvSpec("x", (), 10, 10, Difficulty.EASY)
    with pytest.raises(ConfigError):
        EnvSpec("x", ("a", "a"), 10, 10, Difficulty.EASY)
    with pytest.raises(ConfigError):
        EnvSpec("x", ("a",), 0, 10, Difficulty.EASY)


def test_step_outcome_terminal_iff_cause():
    StepOutcome(None, 0.0, False)
    StepOutcome(None, 1.0, True, TerminationCause.GOAL_REACHED)
    with pytest.raises(ValueError):
        StepOutcome(None, 0.0, True)
    with pytest.raises(ValueError):
        StepOutcome(None, 0.0, False, TerminationCause.TIMEOUT)


def test_episode_seed_range():
    EpisodeSeed(2**64 - 1, 0)
    with pytest.raises(ConfigError):
        EpisodeSeed(2**64, 0)
    with pytest.raises(ConfigError):
        EpisodeSeed(-1, 0)
    with pytest.raises(ConfigError):
        EpisodeSeed(0, -1)


def test_derive_rng_streams_are_reproducible_and_distinct():
    s = EpisodeSeed(42, 3)
    a = derive_rng(s, "env").integers(0, 2**32, 8)
    b = derive_rng(s, "env").integers(0, 2**32, 8)
    c = derive_rng(s, "fallback").integers(0, 2**32, 8)
    d = derive_rng(EpisodeSeed(42, 4), "env").integers(0, 2**32, 8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_registry_lookup_is_case_insensitive():
    assert env_spec("hanoi").name == "Hanoi"
    assert env_spec("BABYAI-PUTNEXT").name == "BabyAI-Putnext"
    with pytest.raises(ConfigError):
        env_spec("Sokoban")
    assert len(registered_specs()) == 7


def test_duplicate_registration_rejected():
    with pytest.raises(ConfigError):
        register_env(env_spec("Hanoi"), HanoiEnv)


def test_step_before_reset_and_after_terminal():
    env = make_env("Hanoi")
    with pytest.raises(EpisodeStateError):
        env.step(1)
    with pytest.raises(EpisodeStateError):
        env.normalized_score()
    env.reset(EpisodeSeed(0, 0))
    for move in [("A", "C"), ("A", "B"), ("C", "B"), ("A", "C"), ("B", "A"), ("B", "C"), ("A", "C")]:
        out = env.step(action_index(*move))
    assert out.terminal and out.termination_cause is TerminationCause.GOAL_REACHED
    with pytest.raises(EpisodeStateError):
        env.step(1)


@pytest.mark.parametrize("bad", [0, 7, -1, 2.0, "1", True, None])
def test_action_index_validation(bad):
    env, _ = reset("Hanoi", EpisodeSeed(0, 0))
    with pytest.raises(ProtocolError):
        env.step(bad)
    assert env.timestep == 1


def test_numpy_integer_actions_accepted():
    env, _ = reset("Hanoi", EpisodeSeed(0, 0))
    env.step(np.int64(2))
    assert env.timestep == 2


def test_timeout_fires_after_max_timesteps():
    env, _ = reset("Messenger", EpisodeSeed(5, 0))
    steps = 0
    while not env.terminal:
        out = env.step(5)  # Stay never collides
        steps += 1
    assert steps == env.spec.max_timesteps == 10
    assert out.termination_cause is TerminationCause.TIMEOUT
    assert env.timestep == 11


def test_reset_is_deterministic_per_seed():
    _, a = reset("BabyAI-Pickup", EpisodeSeed(9, 2))
    _, b = reset("BabyAI-Pickup", EpisodeSeed(9, 2))
    _, c = reset("BabyAI-Pickup", EpisodeSeed(9, 3))
    assert a == b
    assert a != c
