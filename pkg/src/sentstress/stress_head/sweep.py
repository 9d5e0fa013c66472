"""Training one head per backbone input layer and tabulating test metrics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..backbone.asr import Backbone
from ..backbone.train import load_audio_features
from ..core import WordPrediction
from ..evaluation.metrics import precision_recall_f1
from .train import (
    TrainedHead,
    build_examples,
    collect_states,
    default_head_config,
    fit_head,
    scores_to_transcript,
    _score,
)


@dataclass(frozen=True)
class SweepRow:
    layer: int
    precision: float
    recall: float
    f1: float
    n_evaluated: int
    n_excluded: int


def layer_sweep(backbone: Backbone, train_manifest: str | Path, test_manifest: str | Path,
                layers: Sequence[int], seed: int = 0, epochs: int = 4,
                train_data=None, test_data=None, **fit_kwargs) -> list[SweepRow]:
    """Layer ``k`` feeds encoder layer k and decoder layer k into the head.

    Backbone transcriptions are computed once; every head sees the same
    data, order and seed.
    """
    layers = list(layers)
    for layer in layers:
        default_head_config(backbone, layer)   # range check before any work
    train_records, train_mels = train_data or load_audio_features(train_manifest)
    test_records, test_mels = test_data or load_audio_features(test_manifest)
    train_states = collect_states(backbone, train_mels, layers, layers)
    test_states = collect_states(backbone, test_mels, layers, layers)
    rows = []
    for pos, layer in enumerate(layers):
        cfg = default_head_config(backbone, layer)
        examples, _ = build_examples(train_records, train_states, pos, pos)
        module, _ = fit_head(examples, cfg, epochs, seed, **fit_kwargs)
        head = TrainedHead(module, backbone.digest())
        preds, excluded = [], 0
        for rec, st in zip(test_records, test_states):
            out = scores_to_transcript(st, _score(head, st, pos, pos))
            if len(out.words) != len(rec.words):
                excluded += 1
                continue
            preds.append(WordPrediction(list(rec.words), out.word_stress, list(rec.stress), rec.id))
        m = precision_recall_f1(preds)
        rows.append(SweepRow(layer, m.precision, m.recall, m.f1, len(preds), excluded))
    return rows


def sweep_markdown(rows: Sequence[SweepRow]) -> str:
    lines = ["| Layer | Prec | Rec | F1 |", "|---|---|---|---|"]
    lines += [f"| {r.layer} | {r.precision:.3f} | {r.recall:.3f} | {r.f1:.3f} |" for r in rows]
    return "\n".join(lines) + "\n"


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["layer", "precision", "recall", "f1", "n_evaluated", "n_excluded"])
    for r in rows:
        writer.writerow([r.layer, f"{r.precision:.6f}", f"{r.recall:.6f}", f"{r.f1:.6f}",
                         r.n_evaluated, r.n_excluded])
    return buf.getvalue()
