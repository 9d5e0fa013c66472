"""Offline synthetic stressed-speech dataset generation."""

from .corpus import toy_story_text
from .dataset import DatagenConfig, DatasetPaths, GenerationReport, generate_dataset, sample_rng
from .labeling import (
    LabelRequest,
    LabelResponse,
    ProviderError,
    RemoteLLMProvider,
    RuleBasedProvider,
    SkipSample,
    StressLabelProvider,
    select_stress_words,
)
from .prosody import VOICE_IDS, VOICES, SynthesisPlan, build_synthesis_plan, emit_ssml, parse_ssml
from .synth import (
    RemoteTTSClient,
    SpeechSample,
    SpeechSynthesizer,
    ToySynthesizer,
    TTSRequest,
    TTSResponse,
    synthesize_toy,
    word_duration,
)

__all__ = [
    "DatagenConfig", "DatasetPaths", "GenerationReport", "generate_dataset", "sample_rng",
    "LabelRequest", "LabelResponse", "ProviderError", "RemoteLLMProvider",
    "RuleBasedProvider", "SkipSample", "StressLabelProvider", "select_stress_words",
    "VOICE_IDS", "VOICES", "SynthesisPlan", "build_synthesis_plan", "emit_ssml", "parse_ssml",
    "RemoteTTSClient", "SpeechSample", "SpeechSynthesizer", "ToySynthesizer",
    "TTSRequest", "TTSResponse", "synthesize_toy", "word_duration", "toy_story_text",
]
