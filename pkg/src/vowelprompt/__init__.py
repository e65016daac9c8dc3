"""Vowel-level prosody extraction and prompt augmentation toolkit.

Pipeline: forced-alignment corpora -> per-vowel prosodic descriptors ->
normalized ordinal bins -> natural-language prompt datasets -> LLM inference
-> verifiable rewards and classification metrics.
"""

from .audio import AudioBuffer, load_audio
from .dsp import (
    Contour,
    PitchBounds,
    VowelLLD,
    adaptive_pitch_bounds,
    f0_contour,
    intensity_contour,
    segment_lld,
)
from .errors import (
    AudioFormatError,
    ConfigError,
    CoverageError,
    GatewayError,
    ManifestError,
    StructuralError,
    TextGridParseError,
    VowelPromptError,
)
from .manifest import UtteranceEntry, load_manifest
from .metrics import ConfusionMatrix, EvalResult, confusion, score
from .normquant import (
    BinnedVowel,
    FeatureId,
    MomentStats,
    NormQuantModel,
    assign_bin,
    bin_segment,
    feature_value,
    fit,
    load_model,
    normalize,
    save_model,
)
from .phones import PhoneInventory, load_phone_inventory, map_phone_to_ipa
from .prompts import (
    PromptRecord,
    PromptTemplateId,
    build_prompt,
    emit_dataset,
)
from .rlvr import ParsedOutput, RewardResult, group_advantages, parse_output, reward
from .segments import VowelSegment, extract_vowel_segments
from .textgrid import (
    AlignmentDoc,
    PhoneInterval,
    Tier,
    parse_textgrid,
    read_textgrid,
    serialize_textgrid,
)
from .verbalize import (
    DescriptorLexicon,
    default_lexicon,
    descriptor_for_vowel,
    load_lexicon,
    utterance_block,
)

__version__ = "0.1.0"
