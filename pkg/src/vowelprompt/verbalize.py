"""Deterministic rendering of binned vowels into natural-language descriptors.

Each binned vowel becomes one line naming the word, the IPA vowel, its time
span, and six ordinal descriptors drawn from a lexicon of K labels per scale.
Rendering is parameter-free and byte-stable: the same bins and lexicon always
produce the same string.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError, StructuralError
from .normquant import BinnedVowel, FeatureId


@dataclass(frozen=True)
class DescriptorLexicon:
    """Ordinal label scales, each of length K, plus the unvoiced-pitch text."""

    level_labels: tuple[str, ...]
    slope_labels: tuple[str, ...]
    variation_labels: tuple[str, ...]
    duration_labels: tuple[str, ...]
    unavailable_pitch_text: str

    @property
    def k(self) -> int:
        return len(self.level_labels)

    def __post_init__(self) -> None:
        lists = {
            "level_labels": self.level_labels,
            "slope_labels": self.slope_labels,
            "variation_labels": self.variation_labels,
            "duration_labels": self.duration_labels,
        }
        k = len(self.level_labels)
        if k < 2:
            raise ConfigError("lexicon needs at least 2 labels per scale")
        for name, labels in lists.items():
            if len(labels) != k:
                raise ConfigError(
                    f"lexicon {name} has {len(labels)} labels, expected {k}"
                )
            if len(set(labels)) != len(labels):
                raise ConfigError(f"lexicon {name} has duplicate labels")
            if not all(isinstance(s, str) and s for s in labels):
                raise ConfigError(f"lexicon {name} must be non-empty strings")
        if not self.unavailable_pitch_text:
            raise ConfigError("lexicon unavailable_pitch_text must be non-empty")


_LEXICON_KEYS = {
    "level_labels", "slope_labels", "variation_labels", "duration_labels",
    "unavailable_pitch_text",
}


def load_lexicon(path: str | Path | None = None) -> DescriptorLexicon:
    """Load a lexicon JSON file, or the packaged K=5 default."""
    if path is None:
        text = resources.files("vowelprompt.data").joinpath("lexicon.json").read_text(
            encoding="utf-8"
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"lexicon is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("lexicon must be a JSON object")
    unknown = set(doc) - _LEXICON_KEYS
    if unknown:
        raise ConfigError(f"lexicon has unknown keys: {sorted(unknown)}")
    missing = _LEXICON_KEYS - set(doc)
    if missing:
        raise ConfigError(f"lexicon is missing keys: {sorted(missing)}")
    return DescriptorLexicon(
        level_labels=tuple(doc["level_labels"]),
        slope_labels=tuple(doc["slope_labels"]),
        variation_labels=tuple(doc["variation_labels"]),
        duration_labels=tuple(doc["duration_labels"]),
        unavailable_pitch_text=doc["unavailable_pitch_text"],
    )


def default_lexicon() -> DescriptorLexicon:
    return load_lexicon(None)


def _label(labels: tuple[str, ...], bin_index: int, lexicon_k: int) -> str:
    if not 0 <= bin_index < lexicon_k:
        raise ConfigError(
            f"bin index {bin_index} does not fit a lexicon with K={lexicon_k}; "
            "the lexicon must match the binning model's K"
        )
    return labels[bin_index]


def descriptor_for_vowel(binned: BinnedVowel, lexicon: DescriptorLexicon) -> str:
    """Render one vowel as a single descriptor line.

    When pitch bins are absent, the three pitch clauses collapse into the
    lexicon's unavailable-pitch text. Raises ConfigError when a bin index
    exceeds the lexicon's K.
    """
    seg = binned.segment
    bins = binned.bins
    k = lexicon.k

    if bins.get(FeatureId.F0_MEAN) is None:
        pitch_part = lexicon.unavailable_pitch_text
    else:
        pitch_part = (
            f"pitch {_label(lexicon.level_labels, bins[FeatureId.F0_MEAN], k)}, "
            f"{_label(lexicon.slope_labels, bins[FeatureId.F0_SLOPE], k)}, "
            f"pitch variation {_label(lexicon.variation_labels, bins[FeatureId.F0_STD], k)}"
        )

    return (
        f'word "{seg.word}" vowel /{seg.ipa}/ ({seg.start:.2f}–{seg.end:.2f}s): '
        f"{pitch_part}, "
        f"intensity {_label(lexicon.level_labels, bins[FeatureId.INTENSITY_MEAN], k)}, "
        f"intensity {_label(lexicon.variation_labels, bins[FeatureId.INTENSITY_STD], k)}, "
        f"duration {_label(lexicon.duration_labels, bins[FeatureId.DURATION], k)}"
    )


def utterance_block(segments: list[BinnedVowel], lexicon: DescriptorLexicon) -> str:
    """Join per-vowel descriptor lines for one utterance; "" when no vowels."""
    indices = [b.segment.index_in_utterance for b in segments]
    if indices != sorted(indices):
        raise StructuralError("binned vowels are not sorted by index_in_utterance")
    return "\n".join(descriptor_for_vowel(b, lexicon) for b in segments)
