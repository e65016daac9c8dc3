"""Pipeline configuration: JSON file with exhaustive key validation.

Every subcommand accepts --config pointing at a JSON document; unknown keys
anywhere in the document are rejected so typos fail loudly instead of
silently falling back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .prompts import DEFAULT_LABEL_SET


@dataclass(frozen=True)
class PitchSettings:
    hop_s: float = 0.01
    voicing_threshold: float = 0.45
    # Generic bounds for the adaptive first pass.
    floor_hz: float = 60.0
    ceiling_hz: float = 600.0

    def __post_init__(self) -> None:
        if self.hop_s <= 0:
            raise ConfigError(f"pitch.hop_s must be positive, got {self.hop_s}")
        if not 0 < self.voicing_threshold < 1:
            raise ConfigError(
                f"pitch.voicing_threshold must be in (0, 1), got {self.voicing_threshold}"
            )
        if not 0 < self.floor_hz < self.ceiling_hz:
            raise ConfigError(
                f"pitch bounds must satisfy 0 < floor < ceiling, got "
                f"({self.floor_hz}, {self.ceiling_hz})"
            )


@dataclass(frozen=True)
class IntensitySettings:
    window_s: float = 0.04
    hop_s: float = 0.01

    def __post_init__(self) -> None:
        if self.window_s <= 0:
            raise ConfigError(f"intensity.window_s must be positive, got {self.window_s}")
        if self.hop_s <= 0:
            raise ConfigError(f"intensity.hop_s must be positive, got {self.hop_s}")


@dataclass(frozen=True)
class BinningSettings:
    k: int = 5
    min_group_count: int = 10

    def __post_init__(self) -> None:
        if not 2 <= self.k <= 9:
            raise ConfigError(f"binning.k must be in [2, 9], got {self.k}")
        if self.min_group_count < 1:
            raise ConfigError(
                f"binning.min_group_count must be >= 1, got {self.min_group_count}"
            )


@dataclass(frozen=True)
class TierSettings:
    phones: str = "phones"
    words: str = "words"

    def __post_init__(self) -> None:
        if not self.phones:
            raise ConfigError("tiers.phones must be non-empty")
        if not self.words:
            raise ConfigError("tiers.words must be non-empty")


@dataclass(frozen=True)
class GatewaySettings:
    base_url: str = "http://localhost:8000/v1"
    model_name: str = "gpt-4o"
    max_concurrency: int = 4
    timeout: float = 60.0
    max_retries: int = 3
    temperature: float = 0.0
    retry_base_delay: float = 1.0


@dataclass(frozen=True)
class PipelineConfig:
    pitch: PitchSettings = field(default_factory=PitchSettings)
    intensity: IntensitySettings = field(default_factory=IntensitySettings)
    binning: BinningSettings = field(default_factory=BinningSettings)
    tiers: TierSettings = field(default_factory=TierSettings)
    lexicon_path: str | None = None
    label_set: tuple[str, ...] = DEFAULT_LABEL_SET
    template: str = "zero_shot_vowel"
    gateway: GatewaySettings = field(default_factory=GatewaySettings)


def _build_section(cls, obj: dict, section: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"config section {section!r} must be an object")
    valid = set(cls.__dataclass_fields__)
    unknown = set(obj) - valid
    if unknown:
        raise ConfigError(
            f"config section {section!r} has unknown keys: {sorted(unknown)}; "
            f"valid keys: {sorted(valid)}"
        )
    return cls(**obj)


_TOP_KEYS = {
    "pitch", "intensity", "binning", "tiers", "lexicon_path", "label_set",
    "template", "gateway",
}


def load_config(path: str | Path | None) -> PipelineConfig:
    """Load a config file, or all defaults when path is None."""
    if path is None:
        return PipelineConfig()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(
            f"config file {path} has unknown keys: {sorted(unknown)}; "
            f"valid keys: {sorted(_TOP_KEYS)}"
        )

    label_set = doc.get("label_set", list(DEFAULT_LABEL_SET))
    if (
        not isinstance(label_set, list)
        or not label_set
        or not all(isinstance(s, str) and s for s in label_set)
    ):
        raise ConfigError("config label_set must be a non-empty list of strings")
    if len(set(label_set)) != len(label_set):
        raise ConfigError("config label_set has duplicate labels")

    lexicon_path = doc.get("lexicon_path")
    if lexicon_path is not None and not isinstance(lexicon_path, str):
        raise ConfigError("config lexicon_path must be a string or null")

    template = doc.get("template", "zero_shot_vowel")
    if not isinstance(template, str):
        raise ConfigError("config template must be a string")

    try:
        return PipelineConfig(
            pitch=_build_section(PitchSettings, doc.get("pitch", {}), "pitch"),
            intensity=_build_section(
                IntensitySettings, doc.get("intensity", {}), "intensity"
            ),
            binning=_build_section(BinningSettings, doc.get("binning", {}), "binning"),
            tiers=_build_section(TierSettings, doc.get("tiers", {}), "tiers"),
            lexicon_path=lexicon_path,
            label_set=tuple(label_set),
            template=template,
            gateway=_build_section(GatewaySettings, doc.get("gateway", {}), "gateway"),
        )
    except TypeError as exc:
        raise ConfigError(f"config file {path} is malformed: {exc}") from None
