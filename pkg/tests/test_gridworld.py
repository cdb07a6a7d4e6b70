from __future__ import annotations

from dataclasses import replace

import pytest

from staterep.core import EpisodeSeed, TerminationCause, env_spec, make_env, reset
from staterep.envs.gridworld import (
    UNSEEN,
    WALL,
    Action,
    Door,
    GridWorldState,
    Heading,
    MissionSpec,
    Obj,
    Task,
    generate,
    grid_observe,
    grid_step,
    mission_success,
    view_to_world,
)

GRID_ENVS = ["BabyAI-Goto", "BabyAI-Open", "BabyAI-Pickup", "BabyAI-PickUpSeqGoTo", "BabyAI-Putnext"]


def _room(objects=None, size=6):
    rows = [[WALL if r in (0, size - 1) or c in (0, size - 1) else None for c in range(size)] for r in range(size)]
    for (r, c), thing in (objects or {}).items():
        rows[r][c] = thing
    return tuple(tuple(row) for row in rows)


def _state(objects, agent=(3, 3), heading=Heading.NORTH, task=Task.GOTO, refs=(("ball", "red"),), **kw):
    return GridWorldState(_room(objects), agent, heading, MissionSpec(task, refs), **kw)


@pytest.mark.parametrize("name", GRID_ENVS)
def test_generated_episodes_are_not_solved_at_reset(name):
    for i in range(30):
        env, obs = reset(name, EpisodeSeed(1, i))
        assert not mission_success(env.state)
        assert obs.mission_text == env.state.mission.mission_text


def test_goto_succeeds_when_facing_target():
    s = _state({(2, 3): Obj("ball", "red")})
    assert mission_success(s)
    s = replace(s, heading=Heading.EAST)
    assert not mission_success(s)
    s2, reward, cause = grid_step(s, Action.TURN_LEFT)
    assert reward == 1.0 and cause is TerminationCause.GOAL_REACHED


def test_pickup_and_drop():
    s = _state({(2, 3): Obj("key", "blue")}, task=Task.PICKUP, refs=(("ball", "red"),))
    s, _, _ = grid_step(s, Action.PICKUP)
    assert s.carrying == Obj("key", "blue") and s.cell((2, 3)) is None
    s, _, _ = grid_step(s, Action.FORWARD)
    assert s.agent_pos == (2, 3)
    s, _, _ = grid_step(s, Action.DROP)
    assert s.carrying is None and s.cell((1, 3)) == Obj("key", "blue")
    # dropping into a wall is a no-op
    s, _, _ = grid_step(s, Action.TURN_LEFT)
    s, _, _ = grid_step(s, Action.TURN_LEFT)
    before = s
    s, _, _ = grid_step(s, Action.DROP)
    assert s == before


def test_locked_door_needs_matching_key():
    s = _state({(2, 3): Door("green", "locked")}, task=Task.OPEN, refs=(("door", "green"),))
    s2, _, _ = grid_step(s, Action.TOGGLE)
    assert s2 == s
    s3, reward, cause = grid_step(replace(s, carrying=Obj("key", "green")), Action.TOGGLE)
    assert s3.cell((2, 3)) == Door("green", "open") and cause is TerminationCause.GOAL_REACHED
    s4, _, _ = grid_step(replace(s, carrying=Obj("key", "red")), Action.TOGGLE)
    assert s4.cell((2, 3)) == Door("green", "locked")


def test_put_next_requires_adjacency():
    refs = (("ball", "red"), ("box", "blue"))
    s = _state({(2, 3): Obj("ball", "red"), (1, 1): Obj("box", "blue")}, task=Task.PUT_NEXT, refs=refs)
    s, _, cause = grid_step(s, Action.PICKUP)
    assert cause is TerminationCause.NONE
    s = replace(s, agent_pos=(2, 2), heading=Heading.WEST)
    s, reward, cause = grid_step(s, Action.DROP)
    assert s.cell((2, 1)) == Obj("ball", "red")
    assert cause is TerminationCause.GOAL_REACHED


def test_pickup_seq_goto_needs_stage():
    refs = (("key", "yellow"), ("ball", "red"))
    s = _state({(2, 3): Obj("ball", "red"), (3, 4): Obj("key", "yellow")}, task=Task.PICKUP_SEQ_GOTO, refs=refs)
    assert not mission_success(s)  # facing the ball but nothing picked up yet
    s = replace(s, heading=Heading.EAST)
    s, _, cause = grid_step(s, Action.PICKUP)
    assert s.stage == 1 and cause is TerminationCause.NONE
    s, reward, cause = grid_step(s, Action.TURN_LEFT)
    assert cause is TerminationCause.GOAL_REACHED


def test_view_geometry_and_occlusion():
    # agent faces north in a 6x6 room; the wall row 0 is 3 cells ahead
    s = _state({(2, 3): Obj("box", "grey")})
    obs = grid_observe(s)
    assert obs.view[6][3] is None  # the agent's own cell
    assert obs.view[5][3] == Obj("box", "grey")
    assert obs.view[3][3] is WALL
    assert all(cell is UNSEEN for cell in obs.view[0])  # beyond the wall
    assert view_to_world(s, 6, 3) == (3, 3)
    assert view_to_world(replace(s, heading=Heading.EAST), 5, 3) == (3, 4)
    assert view_to_world(replace(s, heading=Heading.EAST), 6, 4) == (4, 3)


def test_open_task_has_two_rooms_and_a_door():
    s = generate(Task.OPEN, __import__("numpy").random.default_rng(0))
    doors = [cell for row in s.layout for cell in row if isinstance(cell, Door)]
    assert len(doors) == 1 and doors[0].state == "closed"
    assert s.shape == (8, 15)


def test_binary_score():
    env = make_env("BabyAI-Goto")
    env.reset(EpisodeSeed(0, 0))
    env.set_state(_state({(2, 4): Obj("ball", "red")}))
    assert env.step(Action.TURN_RIGHT + 1).reward == 0.0
    assert env.step(Action.FORWARD + 1).reward == 0.0
    out = env.step(Action.TURN_LEFT + 1)
    assert out.reward == 1.0 and out.termination_cause is TerminationCause.GOAL_REACHED
    assert env.normalized_score() == 1.0


def test_grid_timeout_scores_zero():
    env, _ = reset("BabyAI-Goto", EpisodeSeed(0, 1))
    while not env.terminal:
        env.step(Action.DROP + 1)  # nothing carried: a no-op
    assert env.termination_cause is TerminationCause.TIMEOUT
    assert env.timestep == env_spec("BabyAI-Goto").max_timesteps + 1
    assert env.normalized_score() == 0.0
