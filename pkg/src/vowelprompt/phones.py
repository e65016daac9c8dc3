"""Phone label to IPA vowel mapping.

Aligner output uses language-specific phone labels: English alignments carry
ARPAbet labels with stress digits (AH0, AE1), other languages carry IPA
directly. This module normalizes both into a shared IPA vowel inventory so
that downstream grouping by vowel type is language independent.

The inventory and per-language mapping live in ``data/phone_inventory.json``
and can be replaced by the caller for other phone sets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class PhoneInventory:
    """IPA vowel inventory plus per-language label mapping schemes."""

    vowels: frozenset[str]
    # language -> ("arpabet", {label: ipa}) or ("ipa", {})
    languages: dict[str, tuple[str, dict[str, str]]]

    def is_vowel(self, ipa: str) -> bool:
        return ipa in self.vowels


def _validate(doc: dict) -> PhoneInventory:
    if not isinstance(doc, dict):
        raise ConfigError("phone inventory must be a JSON object")
    vowels = doc.get("vowel_inventory")
    if not isinstance(vowels, list) or not all(isinstance(v, str) and v for v in vowels):
        raise ConfigError("phone inventory: 'vowel_inventory' must be a list of strings")
    langs_doc = doc.get("languages", {})
    if not isinstance(langs_doc, dict):
        raise ConfigError("phone inventory: 'languages' must be an object")

    vowel_set = frozenset(vowels)
    languages: dict[str, tuple[str, dict[str, str]]] = {}
    for lang, entry in langs_doc.items():
        if not isinstance(entry, dict):
            raise ConfigError(f"phone inventory: language {lang!r} entry must be an object")
        scheme = entry.get("scheme")
        if scheme not in ("arpabet", "ipa"):
            raise ConfigError(
                f"phone inventory: language {lang!r} has unknown scheme {scheme!r}"
            )
        phone_map = entry.get("phone_map", {})
        if not isinstance(phone_map, dict):
            raise ConfigError(f"phone inventory: language {lang!r} phone_map must be an object")
        for k, v in phone_map.items():
            if v not in vowel_set:
                raise ConfigError(
                    f"phone inventory: language {lang!r} maps {k!r} to {v!r}, "
                    "which is not in the vowel inventory"
                )
        languages[lang] = (scheme, dict(phone_map))
    return PhoneInventory(vowels=vowel_set, languages=languages)


def load_phone_inventory(path: str | Path | None = None) -> PhoneInventory:
    """Load the phone inventory, from ``path`` or the packaged default."""
    if path is None:
        text = resources.files("vowelprompt.data").joinpath("phone_inventory.json").read_text(
            encoding="utf-8"
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"phone inventory is not valid JSON: {exc}") from None
    return _validate(doc)


def map_phone_to_ipa(label: str, language: str, inventory: PhoneInventory) -> str | None:
    """Map an aligner phone label to an IPA vowel, or None for non-vowels.

    ARPAbet labels have one trailing stress digit (0/1/2) stripped before
    lookup. For any scheme, a label that is already an inventory vowel is
    accepted as-is; languages without an inventory entry are treated as
    IPA-native.
    """
    label = label.strip()
    if not label:
        return None
    scheme, phone_map = inventory.languages.get(language, ("ipa", {}))
    if scheme == "arpabet":
        base = label[:-1] if label[-1] in "012" else label
        ipa = phone_map.get(base)
        if ipa is not None:
            return ipa
    if label in inventory.vowels:
        return label
    return None
