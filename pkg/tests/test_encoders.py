from __future__ import annotations

import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from staterep.core import ConfigError, EpisodeSeed, reset
from staterep.encoders import (
    HanoiParseError,
    RepresentationSpec,
    Structure,
    decode_hanoi,
    encode_grid,
    encode_hanoi,
    encode_messenger,
    encode_observation,
    render_image,
)
from staterep.encoders.grid import relative_phrase
from staterep.envs.gridworld import WALL, GridObservation, Heading, Obj, UNSEEN
from staterep.envs.hanoi import HanoiState, all_states
from staterep.envs.messenger import EntityView, MessengerObservation, Role

HANOI_FORMATS = ["NaturalLanguage", "DictList", "Matrix", "TaggedList"]


@pytest.mark.parametrize("fmt", HANOI_FORMATS)
def test_hanoi_reset_matches_golden(fmt, golden):
    assert encode_hanoi(HanoiState.initial(), fmt) == golden(f"hanoi_{fmt}.txt")


def _coordinates_obs():
    def view(name, pos):
        return EntityView(name, "", Role.GOAL, pos, (pos[0] - 5, pos[1] - 5))

    return MessengerObservation(
        (5, 5), False, None, (view("airplane", (5, 3)), view("ball", (7, 5)), view("queen", (3, 5)))
    )


def test_messenger_coordinates_matches_golden(golden):
    assert encode_messenger(_coordinates_obs(), "Coordinates") == golden("messenger_coordinates.txt")


def test_messenger_natural_language_box():
    obs = MessengerObservation(
        (5, 5), True, "Move North",
        (
            EntityView("bird", "", Role.GOAL, (0, 1), (-5, -4)),
            EntityView("ship", "", Role.ENEMY, (9, 0), (4, -5)),
            EntityView("sword", "", Role.MESSAGE, (8, 7), (3, 2)),
        ),
    )
    assert encode_messenger(obs, "NaturalLanguage") == (
        "You took action Move North.\n"
        "You (agent) already have the message.\n"
        "You see:\n"
        "- bird 9 steps away\n"
        "- ship 9 steps away\n"
        "- sword 5 steps away"
    )


def test_messenger_natural_language_pos_box():
    obs = MessengerObservation(
        (5, 6), True, None,
        (
            EntityView("mage", "", Role.ENEMY, (5, 3), (0, -3)),
            EntityView("dog", "", Role.GOAL, (5, 7), (0, 1)),
            EntityView("ball", "", Role.MESSAGE, (4, 4), (-1, -2)),
        ),
    )
    assert encode_messenger(obs, "NaturalLanguagePos") == (
        "You are an agent with the message. You are currently in position 5, 6. "
        "You can see a mage 3 steps to the west, a dog 1 steps to the east, a ball 3 steps to the northwest."
    )


def test_messenger_symbolic_box():
    obs = MessengerObservation(
        (5, 5), False, None,
        (
            EntityView("fish", "", Role.ENEMY, (7, 5), (2, 0)),
            EntityView("scientist", "", Role.MESSAGE, (5, 7), (0, 2)),
            EntityView("robot", "", Role.GOAL, (5, 3), (0, -2)),
        ),
    )
    expected = [".........."] * 5 + ["...G.A.M..", "..........", ".....E....", "..........", ".........."]
    expected += ["Legend:", "A=agent(no msg)", "P=agent(with msg)", ".=empty", "Entities:"]
    expected += ["  E=fish", "  M=scientist", "  G=robot"]
    assert encode_messenger(obs, "Symbolic") == "\n".join(expected)


def test_messenger_rejects_hanoi_structure():
    with pytest.raises(ValueError):
        encode_messenger(_coordinates_obs(), "Matrix")


@pytest.mark.parametrize("fmt", HANOI_FORMATS)
def test_hanoi_round_trip_all_states(fmt):
    for state in all_states(3):
        assert decode_hanoi(encode_hanoi(state, fmt), fmt) == state


@pytest.mark.parametrize(
    "fmt, text",
    [
        ("DictList", "{'A': [2, 1, 0], 'B': []}"),
        ("DictList", "{'A': [2, 1, 0], 'B': [], 'C': [], 'D': []}"),
        ("Matrix", "[[2, 1, 0], [-1, -1], [-1, -1, -1]]"),
        ("Matrix", "[[2, -1, 0], [-1, -1, -1], [1, -1, -1]]"),
        ("TaggedList", "- A: |bottom, [2, 1, 0], top|\n- B: |bottom, [], top|"),
        ("DictList", "{'A': [0, 1, 2], 'B': [], 'C': []}"),
        ("NaturalLanguage", "Peg A is full."),
    ],
)
def test_hanoi_decode_rejects_malformed(fmt, text):
    with pytest.raises((HanoiParseError, ValueError)):
        decode_hanoi(text, fmt)


def test_parse_error_reports_position():
    with pytest.raises(HanoiParseError) as exc:
        decode_hanoi("{'A': [2, 1, 0], 'B': [], 'C' []}", "DictList")
    assert exc.value.position is not None


@settings(max_examples=300, deadline=None)
@given(text=st.text(max_size=60), fmt=st.sampled_from(HANOI_FORMATS))
def test_decode_never_crashes_unexpectedly(text, fmt):
    try:
        state = decode_hanoi(text, fmt)
    except (HanoiParseError, ValueError):
        return
    assert isinstance(state, HanoiState)


def test_grid_text_layout():
    view = [[UNSEEN] * 7 for _ in range(7)]
    for i in range(7):
        view[6][i] = None
        view[5][i] = None
    view[4][3] = Obj("ball", "red")
    view[5][2] = Obj("key", "yellow")
    view[3] = [WALL] * 7
    obs = GridObservation(tuple(map(tuple, view)), Heading.NORTH, Obj("box", "green"), "go to the red ball")
    assert encode_grid(obs) == (
        "Mission: go to the red ball\n"
        "You are facing north.\n"
        "You are carrying a green box.\n"
        "In front of you: empty floor.\n"
        "You see:\n"
        "- a yellow key 1 step forward and 1 step left\n"
        "- a red ball 2 steps forward"
    )


def test_relative_phrases():
    assert relative_phrase(2, 0) == "2 steps forward"
    assert relative_phrase(0, -1) == "1 step left"
    assert relative_phrase(3, 1) == "3 steps forward and 1 step right"


def _pixel(png: bytes, xy):
    return Image.open(io.BytesIO(png)).convert("RGB").getpixel(xy)


def test_hanoi_image_pixels():
    png = render_image(HanoiState.initial())
    img = Image.open(io.BytesIO(png))
    assert img.size == (320, 240) and img.format == "PNG"
    assert _pixel(png, (63, 150)) == (220, 40, 40)  # disk 0 on top of peg A
    assert _pixel(png, (83, 170)) == (40, 170, 60)  # disk 1
    assert _pixel(png, (93, 190)) == (50, 90, 220)  # disk 2 at the bottom
    assert _pixel(png, (93, 170)) == (255, 255, 255)
    assert _pixel(png, (200, 190)) == (255, 255, 255)  # peg B is empty


def test_messenger_image_pixels():
    obs = _coordinates_obs()
    png = render_image(obs)
    assert Image.open(io.BytesIO(png)).size == (320, 320)
    assert _pixel(png, (3 * 32 + 2, 5 * 32 + 2)) == (40, 170, 60)  # goal-coloured airplane tile
    agent = _pixel(png, (5 * 32 + 2, 5 * 32 + 2))
    assert agent != (40, 170, 60) and agent != _pixel(png, (0 * 32 + 5, 0 * 32 + 5))


def test_images_are_deterministic():
    env, obs = reset("BabyAI-Open", EpisodeSeed(3, 0))
    assert render_image(obs) == render_image(obs)
    assert render_image(obs)[:8] == b"\x89PNG\r\n\x1a\n"


def test_encode_observation_attaches_image_only_for_image_grounding():
    env, obs = reset("Hanoi", EpisodeSeed(0, 0))
    plain = encode_observation(obs, RepresentationSpec("LongForm", "DictList"))
    assert plain.image is None and plain.format_label is Structure.DICT_LIST
    rich = encode_observation(obs, RepresentationSpec("LongForm", "DictList", "TextPlusImage"))
    assert rich.image and rich.text == plain.text


def test_representation_spec_rules():
    with pytest.raises(ConfigError):
        RepresentationSpec("LongForm", "TaggedList", oracle_flags={"OracleSummary"})
    with pytest.raises(ConfigError):
        RepresentationSpec("LongForm", "TaggedList", "TextOnly", {"OracleVoT"})
    with pytest.raises(ConfigError):
        RepresentationSpec("Medium", "TaggedList")
    with pytest.raises(ConfigError):
        RepresentationSpec("LongForm", "Matrix").validate_for("messenger")
    with pytest.raises(ConfigError):
        RepresentationSpec("Summary", "NaturalLanguage", oracle_flags={"OracleSummary"}).validate_for("messenger")
    spec = RepresentationSpec("Summary", "TaggedList", "TextOnly", {"OracleSummary"})
    assert spec.label == "Summary-TaggedList-TextOnly+OracleSummary"
    assert RepresentationSpec.from_dict(spec.to_dict()) == spec
