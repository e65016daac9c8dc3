"""Praat TextGrid (long text format) parsing and serialization.

The parser accepts the long-format files emitted by forced aligners such as
MFA. It keeps every interval tier, including empty-label (silence) intervals,
trims label whitespace, and validates interval geometry. Point tiers
("TextTier") are consumed but discarded: nothing downstream reads them.

Input may be a decoded string or raw bytes; byte input is decoded as UTF-16
when it starts with a byte-order mark, UTF-8 otherwise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import StructuralError, TextGridParseError


@dataclass(frozen=True)
class PhoneInterval:
    """A labeled time interval on a tier; empty label marks silence."""

    label: str
    start: float
    end: float


@dataclass(frozen=True)
class Tier:
    name: str
    intervals: tuple[PhoneInterval, ...]


@dataclass(frozen=True)
class AlignmentDoc:
    tiers: tuple[Tier, ...]
    total_duration: float

    def tier(self, name: str) -> Tier | None:
        for t in self.tiers:
            if t.name == name:
                return t
        return None


def require_tiers(doc: AlignmentDoc, names: list[str]) -> None:
    """Raise unless every named tier is present."""
    missing = [n for n in names if doc.tier(n) is None]
    if missing:
        have = ", ".join(t.name for t in doc.tiers) or "<none>"
        raise StructuralError(
            f"missing required tier(s) {missing}; document has tiers: {have}"
        )


_KEY_VALUE = re.compile(r"^\s*([A-Za-z ]+?)\s*=\s*(.*?)\s*$")
_ITEM_HEADER = re.compile(r"^\s*(item|intervals|points)\s*\[\s*\d*\s*\]\s*:\s*$")
_SIZE_LINE = re.compile(r"^\s*(intervals|points)\s*:\s*size\s*=\s*(\d+)\s*$")


class _Lines:
    """Cursor over input lines that tracks 1-based line numbers."""

    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    @property
    def lineno(self) -> int:
        return min(self.pos, len(self.lines) - 1) + 1 if self.lines else 1

    def next_content(self) -> tuple[str, int] | None:
        """Advance to the next non-blank line; return (line, lineno) or None at EOF."""
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            self.pos += 1
            if line.strip():
                return line, self.pos
        return None


def _decode(raw: str | bytes) -> str:
    if isinstance(raw, bytes):
        if raw.startswith(b"\xff\xfe") or raw.startswith(b"\xfe\xff"):
            return raw.decode("utf-16")
        if raw.startswith(b"\xef\xbb\xbf"):
            return raw.decode("utf-8-sig")
        return raw.decode("utf-8")
    return raw.lstrip("﻿")


def _expect_kv(lines: _Lines, key: str) -> tuple[str, int]:
    got = lines.next_content()
    if got is None:
        raise TextGridParseError(f"unexpected end of file, expected '{key} = ...'", lines.lineno)
    line, lineno = got
    m = _KEY_VALUE.match(line)
    if not m or m.group(1) != key:
        raise TextGridParseError(f"expected '{key} = ...', got {line.strip()!r}", lineno)
    return m.group(2), lineno


def _parse_number(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise TextGridParseError(f"invalid number {token!r}", lineno) from None


def _parse_string(token: str, lineno: int) -> str:
    token = token.strip()
    if len(token) < 2 or not token.startswith('"') or not token.endswith('"'):
        raise TextGridParseError(f"unterminated string {token!r}", lineno)
    inner = token[1:-1]
    # Praat escapes a literal quote by doubling it; a lone quote means the
    # closing delimiter was actually mid-string.
    if inner.count('"') % 2 != 0:
        raise TextGridParseError(f"unterminated string {token!r}", lineno)
    return inner.replace('""', '"')


def parse_textgrid(raw: str | bytes) -> AlignmentDoc:
    """Parse a long-format TextGrid into an AlignmentDoc.

    Intervals are sorted by start time and labels are whitespace-trimmed.
    Raises TextGridParseError (with line number) on malformed input,
    degenerate intervals (xmin >= xmax), or overlapping intervals.
    """
    lines = _Lines(_decode(raw))

    ftype, lineno = _expect_kv(lines, "File type")
    if _parse_string(ftype, lineno) != "ooTextFile":
        raise TextGridParseError(f"malformed header: File type {ftype}", lineno)
    oclass, lineno = _expect_kv(lines, "Object class")
    if _parse_string(oclass, lineno) != "TextGrid":
        raise TextGridParseError(f"malformed header: Object class {oclass}", lineno)

    xmin_tok, lineno = _expect_kv(lines, "xmin")
    _parse_number(xmin_tok, lineno)
    xmax_tok, lineno = _expect_kv(lines, "xmax")
    total_duration = _parse_number(xmax_tok, lineno)

    got = lines.next_content()
    if got is None or "tiers?" not in got[0]:
        raise TextGridParseError("malformed header: expected 'tiers? <exists>'", lines.lineno)
    size_tok, lineno = _expect_kv(lines, "size")
    n_tiers = int(_parse_number(size_tok, lineno))

    got = lines.next_content()
    if got is None or not _ITEM_HEADER.match(got[0]):
        raise TextGridParseError("expected 'item []:'", lines.lineno)

    tiers: list[Tier] = []
    for _ in range(n_tiers):
        got = lines.next_content()
        if got is None or not _ITEM_HEADER.match(got[0]):
            raise TextGridParseError("expected 'item [n]:'", lines.lineno)
        cls_tok, lineno = _expect_kv(lines, "class")
        tier_class = _parse_string(cls_tok, lineno)
        name_tok, lineno = _expect_kv(lines, "name")
        tier_name = _parse_string(name_tok, lineno)
        _expect_kv(lines, "xmin")
        _expect_kv(lines, "xmax")

        if tier_class == "IntervalTier":
            tiers.append(Tier(tier_name, _parse_intervals(lines, total_duration)))
        elif tier_class == "TextTier":
            _skip_points(lines)
        else:
            raise TextGridParseError(f"unknown tier class {tier_class!r}", lineno)

    return AlignmentDoc(tiers=tuple(tiers), total_duration=total_duration)


def _parse_intervals(lines: _Lines, total_duration: float) -> tuple[PhoneInterval, ...]:
    got = lines.next_content()
    if got is None:
        raise TextGridParseError("unexpected end of file in tier", lines.lineno)
    m = _SIZE_LINE.match(got[0])
    if not m or m.group(1) != "intervals":
        raise TextGridParseError(f"expected 'intervals: size = n', got {got[0].strip()!r}", got[1])
    count = int(m.group(2))

    parsed: list[tuple[PhoneInterval, int]] = []
    for _ in range(count):
        got = lines.next_content()
        if got is None or not _ITEM_HEADER.match(got[0]):
            raise TextGridParseError("expected 'intervals [n]:'", lines.lineno)
        xmin_tok, lineno = _expect_kv(lines, "xmin")
        xmin = _parse_number(xmin_tok, lineno)
        xmax_tok, lineno = _expect_kv(lines, "xmax")
        xmax = _parse_number(xmax_tok, lineno)
        text_tok, text_lineno = _expect_kv(lines, "text")
        label = _parse_string(text_tok, text_lineno).strip()
        if xmin < 0:
            raise TextGridParseError(f"negative interval start {xmin}", lineno)
        if xmin >= xmax:
            raise TextGridParseError(f"empty interval: xmin {xmin} >= xmax {xmax}", lineno)
        if xmax > total_duration + 1e-9:
            raise TextGridParseError(
                f"interval end {xmax} exceeds document xmax {total_duration}", lineno
            )
        parsed.append((PhoneInterval(label, xmin, xmax), lineno))

    parsed.sort(key=lambda pair: pair[0].start)
    for (prev, _), (cur, cur_line) in zip(parsed, parsed[1:]):
        if cur.start < prev.end:
            raise TextGridParseError(
                f"overlapping intervals: [{cur.start}, {cur.end}] starts before "
                f"[{prev.start}, {prev.end}] ends",
                cur_line,
            )
    return tuple(interval for interval, _ in parsed)


def _skip_points(lines: _Lines) -> None:
    got = lines.next_content()
    if got is None:
        raise TextGridParseError("unexpected end of file in point tier", lines.lineno)
    m = _SIZE_LINE.match(got[0])
    if not m or m.group(1) != "points":
        raise TextGridParseError(f"expected 'points: size = n', got {got[0].strip()!r}", got[1])
    for _ in range(int(m.group(2))):
        got = lines.next_content()
        if got is None or not _ITEM_HEADER.match(got[0]):
            raise TextGridParseError("expected 'points [n]:'", lines.lineno)
        _expect_kv(lines, "number")
        _expect_kv(lines, "mark")


def _quote(s: str) -> str:
    return '"' + s.replace('"', '""') + '"'


def _num(x: float) -> str:
    # repr() round-trips floats exactly, which keeps parse -> serialize -> parse
    # bit-stable.
    return repr(float(x))


def serialize_textgrid(doc: AlignmentDoc) -> str:
    """Render an AlignmentDoc back to long-format TextGrid text."""
    out = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        "xmin = 0",
        f"xmax = {_num(doc.total_duration)}",
        "tiers? <exists>",
        f"size = {len(doc.tiers)}",
        "item []:",
    ]
    for i, tier in enumerate(doc.tiers, start=1):
        out.append(f"    item [{i}]:")
        out.append('        class = "IntervalTier"')
        out.append(f"        name = {_quote(tier.name)}")
        out.append("        xmin = 0")
        out.append(f"        xmax = {_num(doc.total_duration)}")
        out.append(f"        intervals: size = {len(tier.intervals)}")
        for j, iv in enumerate(tier.intervals, start=1):
            out.append(f"        intervals [{j}]:")
            out.append(f"            xmin = {_num(iv.start)}")
            out.append(f"            xmax = {_num(iv.end)}")
            out.append(f"            text = {_quote(iv.label)}")
    return "\n".join(out) + "\n"


def read_textgrid(path: str | Path) -> AlignmentDoc:
    """Read and parse a TextGrid file, detecting UTF-16 by byte-order mark."""
    return parse_textgrid(Path(path).read_bytes())
