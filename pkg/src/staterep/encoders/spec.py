from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

from ..core import ConfigError


class Granularity(str, enum.Enum):
    LONG_FORM = "LongForm"
    SUMMARY = "Summary"


class Structure(str, enum.Enum):
    NATURAL_LANGUAGE = "NaturalLanguage"
    NATURAL_LANGUAGE_POS = "NaturalLanguagePos"
    TAGGED_LIST = "TaggedList"
    MATRIX = "Matrix"
    DICT_LIST = "DictList"
    COORDINATES = "Coordinates"
    SYMBOLIC = "Symbolic"


class Grounding(str, enum.Enum):
    TEXT_ONLY = "TextOnly"
    TEXT_PLUS_IMAGE = "TextPlusImage"
    TEXT_PLUS_VOT = "TextPlusVoT"


class OracleFlag(str, enum.Enum):
    ORACLE_SUMMARY = "OracleSummary"
    ORACLE_VOT = "OracleVoT"


STRUCTURES: dict[str, tuple[Structure, ...]] = {
    "hanoi": (Structure.NATURAL_LANGUAGE, Structure.TAGGED_LIST, Structure.MATRIX, Structure.DICT_LIST),
    "messenger": (
        Structure.NATURAL_LANGUAGE,
        Structure.NATURAL_LANGUAGE_POS,
        Structure.COORDINATES,
        Structure.SYMBOLIC,
    ),
    "grid": (Structure.NATURAL_LANGUAGE,),
}


def _enum(cls: type[enum.Enum], value: Any, key: str) -> Any:
    if isinstance(value, cls):
        return value
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(m.value for m in cls)  # type: ignore[attr-defined]
        raise ConfigError(f"{key}: {value!r} is not one of {choices}") from None


@dataclass(frozen=True)
class RepresentationSpec:
    """One point of the granularity x structure x grounding design space."""

    granularity: Granularity = Granularity.LONG_FORM
    structure: Structure = Structure.NATURAL_LANGUAGE
    grounding: Grounding = Grounding.TEXT_ONLY
    oracle_flags: frozenset[OracleFlag] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "granularity", _enum(Granularity, self.granularity, "granularity"))
        object.__setattr__(self, "structure", _enum(Structure, self.structure, "structure"))
        object.__setattr__(self, "grounding", _enum(Grounding, self.grounding, "grounding"))
        flags = frozenset(_enum(OracleFlag, f, "oracle_flags") for f in self.oracle_flags)
        object.__setattr__(self, "oracle_flags", flags)
        if OracleFlag.ORACLE_SUMMARY in flags and self.granularity is not Granularity.SUMMARY:
            raise ConfigError("oracle_flags: OracleSummary requires granularity Summary")
        if OracleFlag.ORACLE_VOT in flags and self.grounding is not Grounding.TEXT_PLUS_VOT:
            raise ConfigError("oracle_flags: OracleVoT requires grounding TextPlusVoT")

    @property
    def oracle_summary(self) -> bool:
        return OracleFlag.ORACLE_SUMMARY in self.oracle_flags

    @property
    def oracle_vot(self) -> bool:
        return OracleFlag.ORACLE_VOT in self.oracle_flags

    def validate_for(self, family: str) -> None:
        allowed = STRUCTURES.get(family)
        if allowed is None:
            raise ConfigError(f"unknown environment family {family!r}")
        if self.structure not in allowed:
            names = ", ".join(s.value for s in allowed)
            raise ConfigError(f"structure: {self.structure.value} is not valid for {family} (choose {names})")
        if self.oracle_summary and family != "hanoi":
            raise ConfigError("oracle_flags: OracleSummary is only available for Hanoi")

    @property
    def label(self) -> str:
        base = f"{self.granularity.value}-{self.structure.value}-{self.grounding.value}"
        return "+".join([base, *sorted(f.value for f in self.oracle_flags)])

    def to_dict(self) -> dict[str, Any]:
        return {
            "granularity": self.granularity.value,
            "structure": self.structure.value,
            "grounding": self.grounding.value,
            "oracle_flags": sorted(f.value for f in self.oracle_flags),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RepresentationSpec:
        return cls(
            data.get("granularity", Granularity.LONG_FORM),
            data.get("structure", Structure.NATURAL_LANGUAGE),
            data.get("grounding", Grounding.TEXT_ONLY),
            frozenset(data.get("oracle_flags", ())),
        )


@dataclass(frozen=True)
class EncodedObservation:
    text: str
    format_label: Structure
    image: bytes | None = None
