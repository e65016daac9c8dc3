"""Prompt template assembly and dataset emission.

Five templates cover zero-shot (transcript only / with vowel descriptors),
few-shot with in-context exemplars, and the two fine-tuning variants (with
and without a reasoning instruction). Conversations render inside a
'### ... ###' fence, one `Speaker_i:<text>` line per turn with indices
assigned by order of first appearance, the target utterance last.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import StructuralError
from .manifest import UtteranceEntry

DEFAULT_LABEL_SET = ("angry", "happy", "sad", "neutral", "excited")
DEFAULT_FEW_SHOT_EXEMPLARS = 3


class PromptTemplateId(str, Enum):
    ZERO_SHOT_TRANSCRIPT = "zero_shot_transcript"
    ZERO_SHOT_VOWEL = "zero_shot_vowel"
    FEW_SHOT_VOWEL = "few_shot_vowel"
    SFT_WITH_REASONING = "sft_with_reasoning"
    SFT_WITHOUT_REASONING = "sft_without_reasoning"


_VOWEL_TEMPLATES = {
    PromptTemplateId.ZERO_SHOT_VOWEL,
    PromptTemplateId.FEW_SHOT_VOWEL,
    PromptTemplateId.SFT_WITH_REASONING,
    PromptTemplateId.SFT_WITHOUT_REASONING,
}

_INTRO = "Now you are an expert in sentiment and emotional analysis."
_CONTEXT_INTRO = (
    "The following conversation noted between '### ###' involves several speakers."
)
_OUTPUT_LABEL = (
    "Please output ONLY ONE label from {labels} as the first word, "
    "and then explain your choice."
)
_SFT_WITH_THINK = (
    "Output the thinking process in <think> </think> and emotion label "
    "prediction in <answer> </answer> tags."
)
_SFT_WITHOUT_THINK = "Output the emotion label prediction in <answer> </answer> tags."


@dataclass(frozen=True)
class PromptRecord:
    utterance_id: str
    template: PromptTemplateId
    prompt_text: str
    label: str | None
    label_set: tuple[str, ...]
    exemplar_ids: tuple[str, ...] = ()


def _conversation(entry: UtteranceEntry) -> tuple[str, str]:
    """Render the fenced conversation; returns (fenced text, target reference).

    The target reference is the `Speaker_i:<target_speech>` string reused in
    the question and descriptor-header lines.
    """
    order: dict[str, int] = {}
    for speaker, _ in entry.context:
        order.setdefault(speaker, len(order))
    order.setdefault(entry.speaker_id, len(order))

    lines = [f"Speaker_{order[speaker]}:{text}" for speaker, text in entry.context]
    target_ref = f"Speaker_{order[entry.speaker_id]}:{entry.transcript}"
    lines.append(target_ref)
    lines[0] = "### " + lines[0]
    lines[-1] = lines[-1] + " ###"
    return "\n".join(lines), target_ref


def build_prompt(
    entry: UtteranceEntry,
    block: str,
    template: PromptTemplateId,
    label_set: tuple[str, ...] = DEFAULT_LABEL_SET,
    exemplars: list[tuple[str, str]] | None = None,
) -> PromptRecord:
    """Assemble one prompt for an utterance.

    ``block`` is the rendered vowel-descriptor block (ignored by the
    transcript-only template). ``exemplars`` is a list of
    (utterance_id, rendered example text) pairs, required for the few-shot
    template and rejected elsewhere.
    """
    if not entry.transcript.strip():
        raise StructuralError(
            f"utterance {entry.utterance_id!r} has no transcript to prompt with"
        )
    if template is PromptTemplateId.FEW_SHOT_VOWEL:
        if not exemplars:
            raise StructuralError("few-shot prompt requires at least one exemplar")
    elif exemplars:
        raise StructuralError(f"template {template.value} does not take exemplars")
    if entry.label is not None and entry.label not in label_set:
        raise StructuralError(
            f"utterance {entry.utterance_id!r} has label {entry.label!r} "
            f"outside the label set {list(label_set)}"
        )

    conversation, target_ref = _conversation(entry)
    labels_text = ", ".join(label_set)

    parts = [_INTRO]
    if template is PromptTemplateId.FEW_SHOT_VOWEL:
        for _, text in exemplars or []:
            parts.append("")
            parts.append(text)
        parts.append("")
    parts.append(_CONTEXT_INTRO)
    parts.append(conversation)

    if template in _VOWEL_TEMPLATES:
        parts.append(f"Vowel-level Speech Descriptions of {target_ref}:")
        parts.append(block)
        parts.append(
            f"Please select the emotional label of {target_ref} based on the "
            "context and the vowel-level acoustic features."
        )
    else:
        parts.append(
            f"Please select the emotional label of {target_ref} based on the context."
        )

    if template is PromptTemplateId.SFT_WITH_REASONING:
        parts.append(_SFT_WITH_THINK)
    elif template is PromptTemplateId.SFT_WITHOUT_REASONING:
        parts.append(_SFT_WITHOUT_THINK)
    else:
        parts.append(_OUTPUT_LABEL.format(labels=labels_text))

    return PromptRecord(
        utterance_id=entry.utterance_id,
        template=template,
        prompt_text="\n".join(parts),
        label=entry.label,
        label_set=tuple(label_set),
        exemplar_ids=tuple(ex_id for ex_id, _ in (exemplars or [])),
    )


def render_exemplar(
    entry: UtteranceEntry, block: str, label: str
) -> str:
    """Render one labeled example for few-shot prompting.

    Mirrors the target layout (conversation, descriptor block) and closes
    with the gold label so the model sees a completed instance.
    """
    conversation, target_ref = _conversation(entry)
    return "\n".join(
        [
            conversation,
            f"Vowel-level Speech Descriptions of {target_ref}:",
            block,
            f"Emotion label: {label}",
        ]
    )


def emit_dataset(records: list[PromptRecord], out: str | Path) -> int:
    """Write prompt records as JSONL with stable field order; returns the count."""
    out = Path(out)
    with open(out, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "id": rec.utterance_id,
                        "template": rec.template.value,
                        "prompt": rec.prompt_text,
                        "label": rec.label,
                        "label_set": list(rec.label_set),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    return len(records)


def load_dataset(path: str | Path) -> list[dict]:
    """Read back an emitted prompt dataset (one JSON object per line)."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records
