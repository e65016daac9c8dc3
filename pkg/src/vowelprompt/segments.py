"""Vowel segment extraction from forced alignments.

Walks the phones tier of an alignment, keeps intervals that map to an IPA
vowel, and attaches the enclosing word from the words tier (by vowel
midpoint). Each vowel becomes one segment; diphthongs are single segments
because the aligner emits them as single intervals.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import StructuralError
from .manifest import UtteranceEntry
from .phones import PhoneInventory, map_phone_to_ipa
from .textgrid import AlignmentDoc


@dataclass(frozen=True)
class VowelSegment:
    utterance_id: str
    speaker_id: str
    language: str
    ipa: str
    word: str
    start: float
    end: float
    index_in_utterance: int

    @property
    def duration(self) -> float:
        return self.end - self.start


def extract_vowel_segments(
    entry: UtteranceEntry,
    doc: AlignmentDoc,
    inventory: PhoneInventory,
    phones_tier: str = "phones",
    words_tier: str = "words",
) -> list[VowelSegment]:
    """Extract vowel segments for one utterance, in time order.

    The words tier is optional; vowels outside any word get word "".
    Raises StructuralError if the phones tier is missing or two vowel
    intervals overlap.
    """
    phones = doc.tier(phones_tier)
    if phones is None:
        have = ", ".join(t.name for t in doc.tiers) or "<none>"
        raise StructuralError(
            f"utterance {entry.utterance_id!r}: missing phones tier "
            f"{phones_tier!r}; document has tiers: {have}"
        )
    words = doc.tier(words_tier)

    def word_at(t: float) -> str:
        if words is None:
            return ""
        for iv in words.intervals:
            if iv.start <= t < iv.end:
                return iv.label
        return ""

    segments: list[VowelSegment] = []
    for iv in phones.intervals:
        ipa = map_phone_to_ipa(iv.label, entry.language, inventory)
        if ipa is None:
            continue
        midpoint = 0.5 * (iv.start + iv.end)
        segments.append(
            VowelSegment(
                utterance_id=entry.utterance_id,
                speaker_id=entry.speaker_id,
                language=entry.language,
                ipa=ipa,
                word=word_at(midpoint),
                start=iv.start,
                end=iv.end,
                index_in_utterance=len(segments),
            )
        )

    for prev, cur in zip(segments, segments[1:]):
        if cur.start < prev.end:
            raise StructuralError(
                f"utterance {entry.utterance_id!r}: overlapping phones "
                f"{prev.ipa!r} [{prev.start}, {prev.end}] and "
                f"{cur.ipa!r} [{cur.start}, {cur.end}]"
            )
    return segments
