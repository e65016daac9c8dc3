"""Verifiable reward for tagged model outputs and group-relative advantages.

An output earns a format reward when it contains exactly one
``<think>...</think>`` block followed by exactly one ``<answer>...</answer>``
block, and an accuracy reward when the answer block matches the gold label.
Both checks are rule-based and deterministic. Advantages standardize a group
of rewards to zero mean and unit population std for an external policy
trainer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import StructuralError

_ZERO_VARIANCE_EPS = 1e-8


@dataclass(frozen=True)
class ParsedOutput:
    think: str | None
    answer: str | None
    well_formed: bool


@dataclass(frozen=True)
class RewardResult:
    r_acc: int
    r_format: int

    @property
    def total(self) -> int:
        return self.r_acc + self.r_format


def _first_block(text: str, open_tag: str, close_tag: str) -> str | None:
    start = text.find(open_tag)
    if start == -1:
        return None
    end = text.find(close_tag, start + len(open_tag))
    if end == -1:
        return None
    return text[start + len(open_tag) : end].strip()


def parse_output(o: str) -> ParsedOutput:
    """Extract think/answer blocks; never raises.

    well_formed requires each of the four tags to appear exactly once, in the
    order think-open, think-close, answer-open, answer-close. Text outside
    the blocks is allowed. The answer is taken from the first answer block
    even when the output is not well formed.
    """
    positions = [o.find(tag) for tag in ("<think>", "</think>", "<answer>", "</answer>")]
    counts = [o.count(tag) for tag in ("<think>", "</think>", "<answer>", "</answer>")]
    well_formed = all(c == 1 for c in counts) and all(
        a < b for a, b in zip(positions, positions[1:])
    )
    return ParsedOutput(
        think=_first_block(o, "<think>", "</think>"),
        answer=_first_block(o, "<answer>", "</answer>"),
        well_formed=well_formed,
    )


def reward(
    o: str,
    y: str,
    label_set: tuple[str, ...] | list[str],
    strict_case: bool = False,
) -> RewardResult:
    """Score one output against its gold label.

    r_format = 1 iff well formed; r_acc = 1 iff the extracted answer equals y
    after trimming (and lowercasing unless strict_case). Raises
    StructuralError when y is outside the label set.
    """
    if y not in label_set:
        raise StructuralError(f"gold label {y!r} is outside the label set {list(label_set)}")
    parsed = parse_output(o)
    if parsed.answer is None:
        r_acc = 0
    elif strict_case:
        r_acc = int(parsed.answer.strip() == y.strip())
    else:
        r_acc = int(parsed.answer.strip().lower() == y.strip().lower())
    return RewardResult(r_acc=r_acc, r_format=int(parsed.well_formed))


def group_advantages(rewards: list[float]) -> list[float]:
    """Standardize rewards within a group: (r - mean) / population std.

    Degenerate groups (std below 1e-8) get all-zero advantages. Raises
    ValueError for groups shorter than 2.
    """
    n = len(rewards)
    if n < 2:
        raise ValueError(f"advantage group needs at least 2 rewards, got {n}")
    mean = sum(rewards) / n
    std = math.sqrt(sum((r - mean) ** 2 for r in rewards) / n)
    if std < _ZERO_VARIANCE_EPS:
        return [0.0] * n
    return [(r - mean) / std for r in rewards]
