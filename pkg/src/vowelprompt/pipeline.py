"""Stage orchestration: extract LLDs, fit stats, render prompt datasets.

Each stage reads and writes plain files (JSONL / JSON) so runs are
inspectable and resumable. Iteration follows manifest order everywhere,
which keeps every stage deterministic for a fixed corpus.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .audio import AudioBuffer, load_audio
from .config import PipelineConfig
from .dsp import (
    Contour,
    PitchBounds,
    VowelLLD,
    adaptive_pitch_bounds,
    f0_contour,
    intensity_contour,
    segment_lld,
)
from .errors import ManifestError
from .manifest import UtteranceEntry, load_manifest
from .normquant import NormQuantModel, bin_segment, fit, save_model
from .phones import load_phone_inventory
from .prompts import (
    DEFAULT_FEW_SHOT_EXEMPLARS,
    PromptRecord,
    PromptTemplateId,
    build_prompt,
    emit_dataset,
    render_exemplar,
)
from .segments import VowelSegment, extract_vowel_segments
from .textgrid import read_textgrid
from .verbalize import DescriptorLexicon, utterance_block


def manifest_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _lld_to_json(lld: VowelLLD) -> dict:
    seg = lld.segment
    return {
        "ipa": seg.ipa,
        "word": seg.word,
        "start": seg.start,
        "end": seg.end,
        "index_in_utterance": seg.index_in_utterance,
        "f0_mean": lld.f0_mean,
        "f0_slope": lld.f0_slope,
        "f0_std": lld.f0_std,
        "intensity_mean": lld.intensity_mean,
        "intensity_std": lld.intensity_std,
        "duration": lld.duration,
        "voiced_frames": lld.voiced_frames,
        "pitch_available": lld.pitch_available,
    }


def _lld_from_json(obj: dict, utterance_id: str, speaker_id: str, language: str) -> VowelLLD:
    segment = VowelSegment(
        utterance_id=utterance_id,
        speaker_id=speaker_id,
        language=language,
        ipa=obj["ipa"],
        word=obj["word"],
        start=obj["start"],
        end=obj["end"],
        index_in_utterance=obj["index_in_utterance"],
    )
    return VowelLLD(
        segment=segment,
        f0_mean=obj["f0_mean"],
        f0_slope=obj["f0_slope"],
        f0_std=obj["f0_std"],
        intensity_mean=obj["intensity_mean"],
        intensity_std=obj["intensity_std"],
        duration=obj["duration"],
        voiced_frames=obj["voiced_frames"],
        pitch_available=obj["pitch_available"],
    )


def load_llds(path: str | Path) -> dict[str, list[VowelLLD]]:
    """Read an extracted LLD file back as utterance_id -> segment LLDs."""
    out: dict[str, list[VowelLLD]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise ManifestError(
                    f"LLD file {path} line {lineno} is not valid JSON"
                ) from None
            out[obj["utterance_id"]] = [
                _lld_from_json(s, obj["utterance_id"], obj["speaker_id"], obj["language"])
                for s in obj["segments"]
            ]
    return out


def _dump_contours(
    fh, utterance_id: str, f0: Contour, intensity: Contour
) -> None:
    """Per-frame debug rows on the intensity grid with nearest-frame F0."""
    times = intensity.times()
    f0_idx = np.round((times - f0.first_frame_center) / f0.frame_hop).astype(int)
    f0_idx = np.clip(f0_idx, 0, len(f0.values) - 1)
    f0_at = f0.values[f0_idx] if len(f0.values) else np.full(len(times), np.nan)
    for t, f, db in zip(times, f0_at, intensity.values):
        fh.write(
            json.dumps(
                {
                    "utterance_id": utterance_id,
                    "time": round(float(t), 6),
                    "f0": None if not np.isfinite(f) else float(f),
                    "intensity_db": float(db),
                }
            )
            + "\n"
        )


def extract_corpus(
    manifest_path: str | Path,
    out_path: str | Path,
    config: PipelineConfig,
    phones_tier: str | None = None,
    words_tier: str | None = None,
    jobs: int = 1,
    dump_contours_path: str | Path | None = None,
) -> int:
    """Extract per-vowel LLDs for a whole manifest; one JSONL line per utterance.

    Pitch bounds are fit per speaker over all of that speaker's audio before
    any utterance is reduced. Returns the number of utterances written.
    """
    entries = load_manifest(manifest_path)
    inventory = load_phone_inventory()
    phones_tier = phones_tier or config.tiers.phones
    words_tier = words_tier or config.tiers.words
    generic = PitchBounds(config.pitch.floor_hz, config.pitch.ceiling_hz)

    audio_cache: dict[Path, AudioBuffer] = {}

    def audio_for(entry: UtteranceEntry) -> AudioBuffer:
        if entry.audio_path not in audio_cache:
            audio_cache[entry.audio_path] = load_audio(entry.audio_path)
        return audio_cache[entry.audio_path]

    by_speaker: dict[str, list[UtteranceEntry]] = {}
    for entry in entries:
        by_speaker.setdefault(entry.speaker_id, []).append(entry)

    bounds: dict[str, PitchBounds] = {}
    for speaker, group in by_speaker.items():
        bounds[speaker] = adaptive_pitch_bounds(
            [audio_for(e) for e in group],
            hop_s=config.pitch.hop_s,
            voicing_threshold=config.pitch.voicing_threshold,
            generic=generic,
        )

    def process(entry: UtteranceEntry) -> tuple[dict, Contour, Contour]:
        audio = audio_for(entry)
        f0 = f0_contour(
            audio,
            bounds[entry.speaker_id],
            hop_s=config.pitch.hop_s,
            voicing_threshold=config.pitch.voicing_threshold,
        )
        level = intensity_contour(
            audio,
            window_s=config.intensity.window_s,
            hop_s=config.intensity.hop_s,
        )
        doc = read_textgrid(entry.alignment_path)
        segs = extract_vowel_segments(
            entry, doc, inventory, phones_tier=phones_tier, words_tier=words_tier
        )
        line = {
            "utterance_id": entry.utterance_id,
            "speaker_id": entry.speaker_id,
            "language": entry.language,
            "segments": [_lld_to_json(segment_lld(s, f0, level)) for s in segs],
        }
        return line, f0, level

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(process, entries))
    else:
        results = [process(e) for e in entries]

    dump_fh = None
    if dump_contours_path is not None:
        dump_fh = open(dump_contours_path, "w", encoding="utf-8")
    try:
        with open(out_path, "w", encoding="utf-8") as fh:
            for entry, (line, f0, level) in zip(entries, results):
                fh.write(json.dumps(line, ensure_ascii=False) + "\n")
                if dump_fh is not None:
                    _dump_contours(dump_fh, entry.utterance_id, f0, level)
    finally:
        if dump_fh is not None:
            dump_fh.close()
    return len(results)


def fit_corpus(
    manifest_path: str | Path,
    out_path: str | Path,
    config: PipelineConfig,
    lld_path: str | Path | None = None,
    **extract_kwargs,
) -> NormQuantModel:
    """Fit normalization stats + quantile edges; writes the stats JSON file.

    Reuses a previously extracted LLD file when given, otherwise extracts
    into a sibling temp file first.
    """
    entries = load_manifest(manifest_path)
    if lld_path is None:
        lld_path = Path(out_path).with_suffix(".llds.jsonl")
        extract_corpus(manifest_path, lld_path, config, **extract_kwargs)
    by_utterance = load_llds(lld_path)

    llds: list[VowelLLD] = []
    for entry in entries:
        if entry.utterance_id not in by_utterance:
            raise ManifestError(
                f"LLD file {lld_path} is missing utterance {entry.utterance_id!r}"
            )
        llds.extend(by_utterance[entry.utterance_id])

    model = fit(
        llds,
        k=config.binning.k,
        min_group_count=config.binning.min_group_count,
        manifest_hash=manifest_hash(manifest_path),
    )
    save_model(model, out_path)
    return model


def render_corpus(
    manifest_path: str | Path,
    model: NormQuantModel,
    lexicon: DescriptorLexicon,
    template: PromptTemplateId,
    out_path: str | Path,
    config: PipelineConfig,
    lld_path: str | Path | None = None,
    few_shot_n: int = DEFAULT_FEW_SHOT_EXEMPLARS,
    **extract_kwargs,
) -> int:
    """Render one prompt per utterance and emit the dataset JSONL.

    Few-shot prompts draw exemplars from the first few labeled utterances of
    other speakers' ids in manifest order (excluding the target utterance).
    Returns the number of records written.
    """
    entries = load_manifest(manifest_path)
    if lld_path is None:
        lld_path = Path(out_path).with_suffix(".llds.jsonl")
        extract_corpus(manifest_path, lld_path, config, **extract_kwargs)
    by_utterance = load_llds(lld_path)

    blocks: dict[str, str] = {}
    for entry in entries:
        llds = by_utterance.get(entry.utterance_id)
        if llds is None:
            raise ManifestError(
                f"LLD file {lld_path} is missing utterance {entry.utterance_id!r}"
            )
        binned = [bin_segment(lld, model) for lld in llds]
        blocks[entry.utterance_id] = utterance_block(binned, lexicon)

    records: list[PromptRecord] = []
    for entry in entries:
        exemplars = None
        if template is PromptTemplateId.FEW_SHOT_VOWEL:
            exemplars = []
            for other in entries:
                if len(exemplars) >= few_shot_n:
                    break
                if other.utterance_id == entry.utterance_id or other.label is None:
                    continue
                exemplars.append(
                    (
                        other.utterance_id,
                        render_exemplar(other, blocks[other.utterance_id], other.label),
                    )
                )
        records.append(
            build_prompt(
                entry,
                blocks[entry.utterance_id],
                template,
                label_set=config.label_set,
                exemplars=exemplars,
            )
        )
    return emit_dataset(records, out_path)
