"""Config file loading: defaults, overrides, exhaustive key checking."""

import json

import pytest

from vowelprompt.config import (
    BinningSettings,
    PipelineConfig,
    PitchSettings,
    TierSettings,
    load_config,
)
from vowelprompt.errors import ConfigError


def write(tmp_path, doc):
    p = tmp_path / "config.json"
    p.write_text(json.dumps(doc), encoding="utf-8")
    return p


def test_none_path_gives_defaults():
    cfg = load_config(None)
    assert cfg == PipelineConfig()
    assert cfg.binning.k == 5
    assert cfg.pitch.voicing_threshold == 0.45
    assert cfg.tiers.phones == "phones"
    assert cfg.template == "zero_shot_vowel"


def test_empty_object_gives_defaults(tmp_path):
    assert load_config(write(tmp_path, {})) == PipelineConfig()


def test_full_override_roundtrip(tmp_path):
    doc = {
        "pitch": {"hop_s": 0.005, "voicing_threshold": 0.5, "floor_hz": 70, "ceiling_hz": 500},
        "intensity": {"window_s": 0.03, "hop_s": 0.005},
        "binning": {"k": 3, "min_group_count": 2},
        "tiers": {"phones": "MFA_phones", "words": "MFA_words"},
        "lexicon_path": "lex.json",
        "label_set": ["calm", "tense"],
        "template": "sft_with_reasoning",
        "gateway": {"base_url": "http://gw:9/v1", "model_name": "m1", "max_retries": 1},
    }
    cfg = load_config(write(tmp_path, doc))
    assert cfg.pitch.hop_s == 0.005
    assert cfg.binning.k == 3
    assert cfg.tiers.words == "MFA_words"
    assert cfg.lexicon_path == "lex.json"
    assert cfg.label_set == ("calm", "tense")
    assert cfg.template == "sft_with_reasoning"
    assert cfg.gateway.base_url == "http://gw:9/v1"
    assert cfg.gateway.max_retries == 1
    assert cfg.gateway.timeout == 60.0  # untouched default


def test_partial_section(tmp_path):
    cfg = load_config(write(tmp_path, {"binning": {"k": 7}}))
    assert cfg.binning.k == 7
    assert cfg.binning.min_group_count == 10


def test_unknown_top_level_key(tmp_path):
    with pytest.raises(ConfigError, match="unknown keys.*'binningg'"):
        load_config(write(tmp_path, {"binningg": {}}))


def test_unknown_section_key(tmp_path):
    with pytest.raises(ConfigError, match="section 'pitch' has unknown keys"):
        load_config(write(tmp_path, {"pitch": {"hop": 0.01}}))


def test_not_json(tmp_path):
    p = tmp_path / "config.json"
    p.write_text("{nope")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(p)


def test_not_an_object(tmp_path):
    p = tmp_path / "config.json"
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="JSON object"):
        load_config(p)


@pytest.mark.parametrize(
    "label_set",
    [[], ["a", "a"], ["a", 3], "not-a-list"],
)
def test_bad_label_set(tmp_path, label_set):
    with pytest.raises(ConfigError, match="label_set"):
        load_config(write(tmp_path, {"label_set": label_set}))


@pytest.mark.parametrize(
    ("section", "payload", "message"),
    [
        ("pitch", {"hop_s": 0}, "hop_s"),
        ("pitch", {"voicing_threshold": 1.5}, "voicing_threshold"),
        ("pitch", {"floor_hz": 700, "ceiling_hz": 600}, "floor"),
        ("intensity", {"window_s": -1}, "window_s"),
        ("binning", {"k": 1}, r"\[2, 9\]"),
        ("binning", {"min_group_count": 0}, "min_group_count"),
        ("tiers", {"phones": ""}, "phones"),
    ],
)
def test_section_validation(tmp_path, section, payload, message):
    with pytest.raises(ConfigError, match=message):
        load_config(write(tmp_path, {section: payload}))


def test_settings_validate_directly():
    with pytest.raises(ConfigError):
        PitchSettings(hop_s=-0.01)
    with pytest.raises(ConfigError):
        BinningSettings(k=12)
    with pytest.raises(ConfigError):
        TierSettings(phones="")
