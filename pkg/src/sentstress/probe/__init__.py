"""Where prosody lives in the backbone: pitch/energy/duration probes per layer."""

from .regression import DegenerateTarget, LayerProbeResult, mae_pct, probe_layer
from .report import probe_csv, probe_report, word_duration_targets
from .signal import (
    FrameSeries,
    PooledTargets,
    compute_f0,
    compute_rms,
    frame_signal,
    pool_embeddings,
    pool_targets,
)

__all__ = [
    "DegenerateTarget", "LayerProbeResult", "mae_pct", "probe_layer", "probe_csv", "probe_report",
    "word_duration_targets", "FrameSeries", "PooledTargets", "compute_f0", "compute_rms",
    "frame_signal", "pool_embeddings", "pool_targets",
]
