"""Corpus manifest loading.

A manifest is a JSONL file with one utterance per line:

    {"utterance_id": "...", "speaker_id": "...", "language": "en",
     "audio_path": "rel/or/abs.wav", "alignment_path": "rel/or/abs.TextGrid",
     "transcript": "...", "context": [{"speaker": "...", "text": "..."}],
     "label": "happy"}

``context`` and ``label`` are optional. Relative paths are resolved against
the manifest's directory so a corpus can be moved as a unit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ManifestError


@dataclass(frozen=True)
class UtteranceEntry:
    utterance_id: str
    speaker_id: str
    language: str
    audio_path: Path
    alignment_path: Path
    transcript: str
    context: tuple[tuple[str, str], ...] = ()
    label: str | None = None


_REQUIRED = ("utterance_id", "speaker_id", "language", "audio_path", "alignment_path")


def _parse_entry(obj: dict, base: Path, lineno: int) -> UtteranceEntry:
    for key in _REQUIRED:
        value = obj.get(key)
        if not isinstance(value, str) or not value.strip():
            raise ManifestError(f"line {lineno}: {key!r} must be a non-empty string")

    context: list[tuple[str, str]] = []
    for i, turn in enumerate(obj.get("context") or []):
        if (
            not isinstance(turn, dict)
            or not isinstance(turn.get("speaker"), str)
            or not isinstance(turn.get("text"), str)
        ):
            raise ManifestError(
                f"line {lineno}: context[{i}] must be an object with "
                "'speaker' and 'text' strings"
            )
        context.append((turn["speaker"], turn["text"]))

    label = obj.get("label")
    if label is not None and (not isinstance(label, str) or not label.strip()):
        raise ManifestError(f"line {lineno}: 'label' must be a non-empty string when present")

    def resolve(p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else base / path

    return UtteranceEntry(
        utterance_id=obj["utterance_id"],
        speaker_id=obj["speaker_id"],
        language=obj["language"],
        audio_path=resolve(obj["audio_path"]),
        alignment_path=resolve(obj["alignment_path"]),
        transcript=obj.get("transcript", ""),
        context=tuple(context),
        label=label,
    )


def load_manifest(path: str | Path) -> list[UtteranceEntry]:
    """Load a JSONL manifest, preserving line order.

    Raises ManifestError on invalid JSON, missing or empty required fields,
    or duplicate utterance ids.
    """
    path = Path(path)
    base = path.parent
    entries: list[UtteranceEntry] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"line {lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise ManifestError(f"line {lineno}: expected a JSON object")
            entry = _parse_entry(obj, base, lineno)
            if entry.utterance_id in seen:
                raise ManifestError(
                    f"line {lineno}: duplicate utterance_id {entry.utterance_id!r}"
                )
            seen.add(entry.utterance_id)
            entries.append(entry)
    if not entries:
        raise ManifestError(f"manifest {path} contains no entries")
    return entries
