"""Two-stage normalization, optional language normalization, quantile binning.

Fitting composes three z-normalization stages in sequence: per speaker on raw
values, per vowel type on the speaker-normalized values, and per language on
the vowel-normalized values (only when the corpus has more than one
language). Quantile edges are then fit per feature over the fully normalized
corpus, and values discretize into K ordinal bins.

Small groups (fewer than min_group_count usable values) fall back to that
stage's global moments, as do unknown speakers/vowels/languages at apply
time, so normalization is total. Pitch features only draw on segments where
pitch was trackable.
"""

from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass
from enum import Enum
from math import floor, isfinite
from pathlib import Path

import numpy as np

from .dsp import VowelLLD
from .errors import ConfigError, CoverageError
from .segments import VowelSegment

SCHEMA_VERSION = 1
DEFAULT_K = 5
DEFAULT_MIN_GROUP_COUNT = 10
_STD_EPS = 1e-8


class FeatureId(str, Enum):
    F0_MEAN = "f0_mean"
    F0_SLOPE = "f0_slope"
    F0_STD = "f0_std"
    INTENSITY_MEAN = "intensity_mean"
    INTENSITY_STD = "intensity_std"
    DURATION = "duration"


PITCH_FEATURES = frozenset({FeatureId.F0_MEAN, FeatureId.F0_SLOPE, FeatureId.F0_STD})
ALL_FEATURES = tuple(FeatureId)


def feature_value(lld: VowelLLD, feature: FeatureId) -> float | None:
    """Raw value of one feature, or None for pitch features without pitch."""
    if feature in PITCH_FEATURES and not lld.pitch_available:
        return None
    return {
        FeatureId.F0_MEAN: lld.f0_mean,
        FeatureId.F0_SLOPE: lld.f0_slope,
        FeatureId.F0_STD: lld.f0_std,
        FeatureId.INTENSITY_MEAN: lld.intensity_mean,
        FeatureId.INTENSITY_STD: lld.intensity_std,
        FeatureId.DURATION: lld.duration,
    }[feature]


@dataclass(frozen=True)
class MomentStats:
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class BinnedVowel:
    segment: VowelSegment
    bins: dict[FeatureId, int | None]


StatsMap = dict[str, dict[FeatureId, MomentStats]]
GlobalStats = dict[FeatureId, MomentStats]


@dataclass(frozen=True)
class NormQuantModel:
    k: int
    min_group_count: int
    multilingual: bool
    per_speaker: StatsMap
    per_vowel_type: StatsMap
    per_language: StatsMap
    global_speaker: GlobalStats
    global_vowel: GlobalStats
    global_language: GlobalStats
    quantile_edges: dict[FeatureId, tuple[float, ...]]
    manifest_hash: str | None = None


def _moments(values: list[float]) -> MomentStats:
    arr = np.asarray(values, dtype=np.float64)
    return MomentStats(mean=float(arr.mean()), std=float(arr.std()), count=len(arr))


def _z(x: float, stats: MomentStats) -> float:
    return (x - stats.mean) / max(stats.std, _STD_EPS)


def _linear_quantile(sorted_values: list[float], p: float) -> float:
    """Quantile by linear interpolation between order statistics."""
    n = len(sorted_values)
    if n == 1:
        return sorted_values[0]
    h = p * (n - 1)
    lo = min(int(floor(h)), n - 2)
    frac = h - lo
    return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo])


def _fit_stage(
    keyed_values: list[tuple[str, float | None]],
    feature: FeatureId,
    min_group_count: int,
) -> tuple[StatsMap, MomentStats, list[float | None]]:
    """Fit one normalization stage for one feature and apply it.

    Returns (per-group stats, stage-global stats, normalized values). Groups
    below min_group_count get the stage-global moments stored under their key.
    """
    usable = [v for _, v in keyed_values if v is not None]
    if not usable:
        raise CoverageError(f"feature {feature.value!r} has zero usable values")
    stage_global = _moments(usable)

    grouped: dict[str, list[float]] = {}
    for key, v in keyed_values:
        if v is not None:
            grouped.setdefault(key, []).append(v)

    stats_by_key: dict[str, MomentStats] = {}
    for key in dict.fromkeys(k for k, _ in keyed_values):
        values = grouped.get(key, [])
        stats_by_key[key] = (
            _moments(values) if len(values) >= min_group_count else stage_global
        )

    normalized = [
        None if v is None else _z(v, stats_by_key[key]) for key, v in keyed_values
    ]
    out: StatsMap = {}
    for key, stats in stats_by_key.items():
        out.setdefault(key, {})[feature] = stats
    return out, stage_global, normalized


def _merge(target: StatsMap, part: StatsMap) -> None:
    for key, by_feature in part.items():
        target.setdefault(key, {}).update(by_feature)


def fit(
    llds: list[VowelLLD],
    k: int = DEFAULT_K,
    min_group_count: int = DEFAULT_MIN_GROUP_COUNT,
    manifest_hash: str | None = None,
) -> NormQuantModel:
    """Fit normalization stats and quantile edges over a corpus of LLDs.

    Iteration follows input (manifest) order, so refitting the same corpus is
    bit-deterministic. Raises CoverageError on empty input or when a feature
    has no usable values; ConfigError for K outside [2, 9].
    """
    if not llds:
        raise CoverageError("cannot fit normalization on zero segments")
    if not 2 <= k <= 9:
        raise ConfigError(f"bin count K must be in [2, 9], got {k}")
    if min_group_count < 1:
        raise ConfigError(f"min_group_count must be >= 1, got {min_group_count}")

    languages = list(dict.fromkeys(lld.segment.language for lld in llds))
    multilingual = len(languages) > 1

    per_speaker: StatsMap = {}
    per_vowel: StatsMap = {}
    per_language: StatsMap = {}
    global_speaker: GlobalStats = {}
    global_vowel: GlobalStats = {}
    global_language: GlobalStats = {}
    quantile_edges: dict[FeatureId, tuple[float, ...]] = {}

    for feature in ALL_FEATURES:
        raw = [
            (lld.segment.speaker_id, feature_value(lld, feature)) for lld in llds
        ]
        spk_stats, spk_global, x1 = _fit_stage(raw, feature, min_group_count)
        _merge(per_speaker, spk_stats)
        global_speaker[feature] = spk_global

        by_vowel = [(lld.segment.ipa, v) for lld, v in zip(llds, x1)]
        vow_stats, vow_global, x2 = _fit_stage(by_vowel, feature, min_group_count)
        _merge(per_vowel, vow_stats)
        global_vowel[feature] = vow_global

        final = x2
        if multilingual:
            by_lang = [(lld.segment.language, v) for lld, v in zip(llds, x2)]
            lang_stats, lang_global, x3 = _fit_stage(by_lang, feature, min_group_count)
            _merge(per_language, lang_stats)
            global_language[feature] = lang_global
            final = x3

        ordered = sorted(v for v in final if v is not None)
        quantile_edges[feature] = tuple(
            _linear_quantile(ordered, j / k) for j in range(1, k)
        )

    return NormQuantModel(
        k=k,
        min_group_count=min_group_count,
        multilingual=multilingual,
        per_speaker=per_speaker,
        per_vowel_type=per_vowel,
        per_language=per_language,
        global_speaker=global_speaker,
        global_vowel=global_vowel,
        global_language=global_language,
        quantile_edges=quantile_edges,
        manifest_hash=manifest_hash,
    )


def normalize(lld: VowelLLD, model: NormQuantModel) -> dict[FeatureId, float | None]:
    """Apply the fitted normalization stages to one segment's LLDs.

    Total: unknown speakers/vowels/languages use the stage-global moments;
    unavailable pitch features come back as None.
    """
    seg = lld.segment
    out: dict[FeatureId, float | None] = {}
    for feature in ALL_FEATURES:
        v = feature_value(lld, feature)
        if v is None:
            out[feature] = None
            continue
        spk = model.per_speaker.get(seg.speaker_id, {}).get(
            feature, model.global_speaker[feature]
        )
        x = _z(v, spk)
        vow = model.per_vowel_type.get(seg.ipa, {}).get(
            feature, model.global_vowel[feature]
        )
        x = _z(x, vow)
        if model.multilingual:
            lang = model.per_language.get(seg.language, {}).get(
                feature, model.global_language[feature]
            )
            x = _z(x, lang)
        out[feature] = x
    return out


def assign_bin(value: float, edges: tuple[float, ...]) -> int:
    """Bin index = number of edges strictly below value (edge values bin low)."""
    if not isfinite(value):
        raise ValueError(f"cannot bin non-finite value {value!r}")
    return bisect_left(list(edges), value)


def bin_segment(lld: VowelLLD, model: NormQuantModel) -> BinnedVowel:
    normalized = normalize(lld, model)
    bins = {
        feature: None if x is None else assign_bin(x, model.quantile_edges[feature])
        for feature, x in normalized.items()
    }
    return BinnedVowel(segment=lld.segment, bins=bins)


def _stats_to_json(stats: MomentStats) -> dict:
    return {"mean": stats.mean, "std": stats.std, "count": stats.count}


def _stats_from_json(obj: dict) -> MomentStats:
    return MomentStats(mean=obj["mean"], std=obj["std"], count=obj["count"])


def _map_to_json(m: StatsMap) -> dict:
    return {
        key: {f.value: _stats_to_json(s) for f, s in by_feature.items()}
        for key, by_feature in m.items()
    }


def _map_from_json(obj: dict) -> StatsMap:
    return {
        key: {FeatureId(f): _stats_from_json(s) for f, s in by_feature.items()}
        for key, by_feature in obj.items()
    }


def save_model(model: NormQuantModel, path: str | Path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "k": model.k,
        "min_group_count": model.min_group_count,
        "multilingual": model.multilingual,
        "manifest_hash": model.manifest_hash,
        "per_speaker": _map_to_json(model.per_speaker),
        "per_vowel_type": _map_to_json(model.per_vowel_type),
        "per_language": _map_to_json(model.per_language),
        "global_speaker": {f.value: _stats_to_json(s) for f, s in model.global_speaker.items()},
        "global_vowel": {f.value: _stats_to_json(s) for f, s in model.global_vowel.items()},
        "global_language": {f.value: _stats_to_json(s) for f, s in model.global_language.items()},
        "quantile_edges": {f.value: list(e) for f, e in model.quantile_edges.items()},
    }
    Path(path).write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


_MODEL_KEYS = {
    "schema_version", "k", "min_group_count", "multilingual", "manifest_hash",
    "per_speaker", "per_vowel_type", "per_language",
    "global_speaker", "global_vowel", "global_language", "quantile_edges",
}


def load_model(path: str | Path) -> NormQuantModel:
    """Load a stats file; JSON float round-trip keeps re-binning bit-identical."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"stats file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"stats file {path} must contain a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"stats file {path} has schema_version {doc.get('schema_version')!r}, "
            f"expected {SCHEMA_VERSION}"
        )
    unknown = set(doc) - _MODEL_KEYS
    if unknown:
        raise ConfigError(f"stats file {path} has unknown keys: {sorted(unknown)}")
    try:
        return NormQuantModel(
            k=doc["k"],
            min_group_count=doc["min_group_count"],
            multilingual=doc["multilingual"],
            manifest_hash=doc.get("manifest_hash"),
            per_speaker=_map_from_json(doc["per_speaker"]),
            per_vowel_type=_map_from_json(doc["per_vowel_type"]),
            per_language=_map_from_json(doc["per_language"]),
            global_speaker={
                FeatureId(f): _stats_from_json(s) for f, s in doc["global_speaker"].items()
            },
            global_vowel={
                FeatureId(f): _stats_from_json(s) for f, s in doc["global_vowel"].items()
            },
            global_language={
                FeatureId(f): _stats_from_json(s) for f, s in doc["global_language"].items()
            },
            quantile_edges={
                FeatureId(f): tuple(e) for f, e in doc["quantile_edges"].items()
            },
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"stats file {path} is malformed: {exc}") from None
