"""Layered encoder-decoder ASR backbone exposing per-layer hidden states."""

from .asr import (
    Backbone,
    ConfigurationError,
    LayeredStates,
    build_vocab,
    encoder_states,
    select_head_input_layer,
    transcribe_batch,
    transcribe_with_states,
)
from .frontend import log_mel
from .model import BackboneConfig, ToyASR
from .train import PretrainConfig, PretrainingFailed, PretrainReport, pretrain_toy_backbone, word_accuracy

__all__ = [
    "Backbone", "ConfigurationError", "LayeredStates", "build_vocab", "encoder_states",
    "select_head_input_layer", "transcribe_batch", "transcribe_with_states", "log_mel",
    "BackboneConfig", "ToyASR", "PretrainConfig", "PretrainingFailed", "PretrainReport",
    "pretrain_toy_backbone", "word_accuracy",
]
