"""Alignment-dependent baseline: a 2x64 bidirectional LSTM tagging words from
(duration, mean energy, max pitch) measured inside each word's segment."""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..audio import read_wav
from ..backbone.asr import ConfigurationError
from ..backbone.train import deterministic_torch
from ..checkpoint import load_checkpoint, load_into, module_params, save_checkpoint
from ..core import ManifestRecord, read_manifest
from ..probe.signal import compute_f0, compute_rms

log = logging.getLogger(__name__)


class BoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class BaselineWordFeatures:
    duration_s: float
    mean_energy: float
    max_pitch_hz: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.duration_s, self.mean_energy, self.max_pitch_hz)


def boundaries_from_starts(starts: Sequence[float], total_s: float) -> list[tuple[float, float]]:
    """Word i spans [start_i, start_{i+1}); the last word runs to the end."""
    ends = list(starts[1:]) + [total_s]
    return list(zip(starts, ends))


def read_alignment_csv(path: str | Path) -> dict[str, list[tuple[str, float, float]]]:
    """External word alignments: CSV with header ``id,word,start_s,end_s``."""
    out: dict[str, list[tuple[str, float, float]]] = defaultdict(list)
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[row["id"]].append((row["word"], float(row["start_s"]), float(row["end_s"])))
    return dict(out)


def extract_baseline_features(waveform: np.ndarray, sample_rate: int,
                              boundaries: Sequence[tuple[float, float]]) -> list[BaselineWordFeatures]:
    """Per-word duration, mean RMS and max voiced F0 over frames centred in the segment.

    A segment too short to contain a frame centre uses the nearest frame.
    """
    total = len(waveform) / sample_rate
    f0 = compute_f0(waveform, sample_rate)
    rms = compute_rms(waveform, sample_rate)
    centers = rms.centers
    feats = []
    for start, end in boundaries:
        if start < 0 or end > total + 1e-6 or end <= start:
            raise BoundaryError(f"segment [{start:.3f}, {end:.3f}] outside audio of {total:.3f}s")
        inside = (centers >= start) & (centers < end)
        if not inside.any() and len(centers):
            inside = np.zeros(len(centers), dtype=bool)
            inside[int(np.argmin(np.abs(centers - 0.5 * (start + end))))] = True
        energy = float(rms.values[inside].mean()) if inside.any() else 0.0
        voiced = inside & f0.voiced
        pitch = float(f0.values[voiced].max()) if voiced.any() else 0.0
        feats.append(BaselineWordFeatures(end - start, energy, pitch))
    return feats


class BLSTMTagger(nn.Module):
    def __init__(self, n_features: int = 3, hidden: int = 64, layers: int = 2):
        super().__init__()
        self.lstm = nn.LSTM(n_features, hidden, num_layers=layers, bidirectional=True, batch_first=True)
        self.out = nn.Linear(2 * hidden, 2)

    def forward(self, x: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        packed = nn.utils.rnn.pack_padded_sequence(x, lengths, batch_first=True, enforce_sorted=False)
        h, _ = self.lstm(packed)
        h, _ = nn.utils.rnn.pad_packed_sequence(h, batch_first=True, total_length=x.shape[1])
        return self.out(h)


@dataclass
class BaselineReport:
    epoch_losses: list[float] = field(default_factory=list)
    n_samples: int = 0
    n_skipped: int = 0
    skipped_ids: list[str] = field(default_factory=list)


class BaselineModel:
    def __init__(self, module: BLSTMTagger, mean: np.ndarray, std: np.ndarray, alignment: str = "gt"):
        self.module = module.eval()
        self.mean = np.asarray(mean, dtype=np.float32)
        self.std = np.asarray(std, dtype=np.float32)
        self.alignment = alignment

    def standardize(self, feats: np.ndarray) -> np.ndarray:
        return ((np.asarray(feats, dtype=np.float32) - self.mean) / self.std).astype(np.float32)

    @torch.no_grad()
    def predict(self, feats: Sequence[BaselineWordFeatures]) -> list[int]:
        if not feats:
            return []
        x = torch.from_numpy(self.standardize([f.as_tuple() for f in feats]))[None]
        logits = self.module(x, torch.tensor([len(feats)]))[0]
        return [int(v) for v in logits.argmax(-1)]

    def save(self, path: str | Path) -> Path:
        cfg = {"mean": self.mean.tolist(), "std": self.std.tolist(), "alignment": self.alignment,
               "hidden": self.module.lstm.hidden_size, "layers": self.module.lstm.num_layers}
        return save_checkpoint(path, "blstm_baseline", cfg, module_params(self.module))

    @classmethod
    def load(cls, path: str | Path) -> "BaselineModel":
        header, params = load_checkpoint(path, "blstm_baseline")
        cfg = header["config"]
        module = BLSTMTagger(hidden=cfg["hidden"], layers=cfg["layers"])
        load_into(module, params)
        return cls(module, np.asarray(cfg["mean"]), np.asarray(cfg["std"]), cfg["alignment"])


def sample_boundaries(rec: ManifestRecord, total_s: float, alignment: str,
                      external: dict | None = None) -> list[tuple[float, float]]:
    if alignment == "gt":
        return boundaries_from_starts(rec.word_start_s, total_s)
    if alignment == "csv":
        if external is None:
            raise ConfigurationError("csv alignment selected but no alignment file given")
        if rec.id not in external:
            raise BoundaryError(f"{rec.id}: no external alignment")
        return [(s, e) for _, s, e in external[rec.id]]
    raise ConfigurationError(f"unknown alignment source {alignment!r}")


def manifest_features(manifest_path: str | Path, alignment: str = "gt", external: dict | None = None):
    """Per-sample feature sequences; samples with bad boundaries are skipped."""
    manifest_path = Path(manifest_path)
    records = read_manifest(manifest_path)
    kept, feats, skipped = [], [], []
    for rec in records:
        wave, sr = read_wav(manifest_path.parent / rec.audio)
        try:
            bounds = sample_boundaries(rec, len(wave) / sr, alignment, external)
            if len(bounds) != len(rec.words):
                raise BoundaryError(f"{rec.id}: {len(bounds)} segments for {len(rec.words)} words")
            f = extract_baseline_features(wave, sr, bounds)
        except BoundaryError as exc:
            log.info("skipping %s: %s", rec.id, exc)
            skipped.append(rec.id)
            continue
        kept.append(rec)
        feats.append(f)
    return kept, feats, skipped


def train_baseline(manifest_path: str | Path, alignment: str = "gt", seed: int = 0,
                   epochs: int = 30, batch_size: int = 32, lr: float = 3e-3,
                   external: dict | None = None, data=None) -> tuple[BaselineModel, BaselineReport]:
    """Fit the BLSTM tagger on standardized per-word features (cross-entropy)."""
    if alignment == "csv" and external is None:
        raise ConfigurationError("csv alignment selected but no alignment file given")
    records, feats, skipped = data if data is not None else manifest_features(manifest_path, alignment, external)
    if not records:
        raise ConfigurationError("no training samples with usable word boundaries")
    matrix = np.concatenate([np.asarray([f.as_tuple() for f in seq]) for seq in feats])
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    std[std == 0] = 1.0
    report = BaselineReport(n_samples=len(records), n_skipped=len(skipped), skipped_ids=skipped)
    with deterministic_torch(seed):
        module = BLSTMTagger()
        model = BaselineModel(module, mean, std, alignment)
        xs = [torch.from_numpy(model.standardize([f.as_tuple() for f in seq])) for seq in feats]
        ys = [torch.tensor(rec.stress, dtype=torch.long) for rec in records]
        opt = torch.optim.Adam(module.parameters(), lr=lr)
        rng = np.random.default_rng(seed)
        for _ in range(epochs):
            module.train()
            order = rng.permutation(len(xs))
            total = count = 0
            for s in range(0, len(order), batch_size):
                idx = order[s: s + batch_size]
                lengths = torch.tensor([len(xs[i]) for i in idx])
                x = nn.utils.rnn.pad_sequence([xs[i] for i in idx], batch_first=True)
                y = nn.utils.rnn.pad_sequence([ys[i] for i in idx], batch_first=True, padding_value=-100)
                logits = module(x, lengths)
                loss = F.cross_entropy(logits.reshape(-1, 2), y.reshape(-1), ignore_index=-100)
                opt.zero_grad()
                loss.backward()
                opt.step()
                n = int(lengths.sum())
                total += float(loss.detach()) * n
                count += n
            report.epoch_losses.append(total / count)
        module.eval()
    return model, report
