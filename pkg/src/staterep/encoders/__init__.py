"""Observation renderings for every representation variant."""

from __future__ import annotations

from ..envs.gridworld import GridObservation
from ..envs.hanoi import HanoiState
from ..envs.messenger import MessengerObservation
from .grid import encode_grid
from .hanoi import HanoiParseError, decode_hanoi, encode_hanoi
from .image import render_image
from .messenger import encode_messenger
from .spec import (
    EncodedObservation,
    Granularity,
    Grounding,
    OracleFlag,
    RepresentationSpec,
    Structure,
)
from .vot import ParsedMap, VotParseError, oracle_vot_map, parse_vot_map


def observation_family(observation: object) -> str:
    if isinstance(observation, HanoiState):
        return "hanoi"
    if isinstance(observation, MessengerObservation):
        return "messenger"
    if isinstance(observation, GridObservation):
        return "grid"
    raise TypeError(f"unsupported observation payload {type(observation).__name__}")


def encode_observation(observation: object, spec: RepresentationSpec) -> EncodedObservation:
    family = observation_family(observation)
    spec.validate_for(family)
    if family == "hanoi":
        text = encode_hanoi(observation, spec.structure)  # type: ignore[arg-type]
    elif family == "messenger":
        text = encode_messenger(observation, spec.structure)  # type: ignore[arg-type]
    else:
        text = encode_grid(observation)  # type: ignore[arg-type]
    image = render_image(observation) if spec.grounding is Grounding.TEXT_PLUS_IMAGE else None  # type: ignore[arg-type]
    return EncodedObservation(text, spec.structure, image)


__all__ = [
    "EncodedObservation",
    "Granularity",
    "Grounding",
    "HanoiParseError",
    "OracleFlag",
    "ParsedMap",
    "RepresentationSpec",
    "Structure",
    "VotParseError",
    "decode_hanoi",
    "encode_grid",
    "encode_hanoi",
    "encode_messenger",
    "encode_observation",
    "observation_family",
    "oracle_vot_map",
    "parse_vot_map",
    "render_image",
]
