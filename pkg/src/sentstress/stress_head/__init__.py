"""Trainable stress-detection head over frozen backbone states."""

from .model import HeadConfig, StressHead, count_head_parameters, head_forward
from .sweep import SweepRow, layer_sweep, sweep_csv, sweep_markdown
from .train import (
    HeadTrainingAborted,
    StressedTranscript,
    TrainedHead,
    TrainingReport,
    default_head_config,
    fit_head,
    predict,
    predict_batch,
    scores_to_transcript,
    train_head,
)

__all__ = [
    "HeadConfig", "StressHead", "count_head_parameters", "head_forward",
    "SweepRow", "layer_sweep", "sweep_csv", "sweep_markdown",
    "HeadTrainingAborted", "StressedTranscript", "TrainedHead", "TrainingReport",
    "default_head_config", "fit_head", "predict", "predict_batch", "scores_to_transcript", "train_head",
]
