"""Running a system over a test manifest and writing JSON/markdown reports."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..backbone.asr import Backbone
from ..backbone.train import load_audio_features
from ..core import ManifestRecord, WordPrediction, read_manifest
from ..stress_head.train import TrainedHead, predict_batch
from .baseline import BaselineModel, manifest_features
from .metrics import Metrics, precision_recall_f1

SYSTEM_NAMES = {"whistress": "Stress head (alignment-free)", "baseline": "BLSTM baseline (+GT alignment)"}


@dataclass
class SystemReport:
    system: str
    metrics: Metrics
    n_manifest: int
    n_evaluated: int
    n_excluded: int
    excluded_ids: list[str] = field(default_factory=list)
    samples: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"system": self.system, "metrics": self.metrics.to_dict(),
                "n_manifest": self.n_manifest, "n_evaluated": self.n_evaluated,
                "n_excluded": self.n_excluded, "excluded_ids": sorted(self.excluded_ids),
                "samples": sorted(self.samples, key=lambda s: s["id"])}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def predictions(self) -> list[WordPrediction]:
        return [WordPrediction(s["words"], s["predicted"], s["gold"], s["id"]) for s in self.samples]


def _report(system: str, records: Sequence[ManifestRecord], predictions: dict[str, list[int]],
            excluded: Sequence[str], hyp_words: dict[str, list[str]] | None = None) -> SystemReport:
    samples = []
    for rec in records:
        if rec.id not in predictions:
            continue
        entry = {"id": rec.id, "words": list(rec.words), "gold": list(rec.stress),
                 "predicted": predictions[rec.id]}
        if hyp_words is not None:
            entry["hypothesis"] = hyp_words[rec.id]
        samples.append(entry)
    preds = [WordPrediction(s["words"], s["predicted"], s["gold"], s["id"]) for s in samples]
    return SystemReport(system, precision_recall_f1(preds), len(records), len(samples),
                        len(excluded), list(excluded), samples)


def evaluate_stress_head(backbone: Backbone, head: TrainedHead, manifest_path: str | Path,
                         data=None) -> SystemReport:
    """Alignment-free system.  Word labels are compared positionally, and only
    for transcriptions with the gold word count; the rest are excluded."""
    records, mels = data if data is not None else load_audio_features(manifest_path)
    if not records:
        raise ValueError("empty test set")
    outputs = predict_batch(backbone, head, mels)
    predictions, excluded, hyp = {}, [], {}
    for rec, out in zip(records, outputs):
        if len(out.words) != len(rec.words):
            excluded.append(rec.id)
            continue
        predictions[rec.id] = list(out.word_stress)
        hyp[rec.id] = list(out.words)
    return _report("whistress", records, predictions, excluded, hyp)


def evaluate_baseline(model: BaselineModel, manifest_path: str | Path, alignment: str = "gt",
                      external: dict | None = None) -> SystemReport:
    manifest_path = Path(manifest_path)
    all_records = read_manifest(manifest_path)
    if not all_records:
        raise ValueError("empty test set")
    kept, feats, skipped = manifest_features(manifest_path, alignment, external)
    predictions = {rec.id: model.predict(f) for rec, f in zip(kept, feats)}
    return _report("baseline", all_records, predictions, skipped)


def evaluate(system: str, manifest_path: str | Path, *, backbone: Backbone | None = None,
             head: TrainedHead | None = None, baseline: BaselineModel | None = None,
             alignment: str = "gt", external: dict | None = None) -> SystemReport:
    if system == "whistress":
        if backbone is None or head is None:
            raise ValueError("the stress-head system needs backbone and head checkpoints")
        return evaluate_stress_head(backbone, head, manifest_path)
    if system == "baseline":
        if baseline is None:
            raise ValueError("the baseline system needs a baseline checkpoint")
        return evaluate_baseline(baseline, manifest_path, alignment, external)
    raise ValueError(f"unknown system {system!r}")


def restrict(report: SystemReport, ids: set[str]) -> Metrics:
    return precision_recall_f1([p for p in report.predictions() if p.sample_id in ids])


def comparison(reports: Sequence[SystemReport]) -> dict:
    """Metrics of each system on its own evaluated set and on the set every
    system evaluated (the fair comparison)."""
    common = set.intersection(*({s["id"] for s in r.samples} for r in reports)) if reports else set()
    rows = []
    for r in reports:
        rows.append({"system": r.system, "own": r.metrics.to_dict(),
                     "common": restrict(r, common).to_dict(),
                     "n_manifest": r.n_manifest, "n_evaluated": r.n_evaluated,
                     "n_excluded": r.n_excluded})
    return {"n_common": len(common), "common_ids": sorted(common), "rows": rows}


def markdown_table(reports: Sequence[SystemReport]) -> str:
    comp = comparison(reports)
    lines = ["| Model | Prec | Rec | F1 | Evaluated | Excluded |", "|---|---|---|---|---|---|"]
    for r in reports:
        m = r.metrics
        lines.append(f"| {SYSTEM_NAMES.get(r.system, r.system)} | {m.precision:.3f} | {m.recall:.3f} "
                     f"| {m.f1:.3f} | {r.n_evaluated} | {r.n_excluded} |")
    if len(reports) > 1:
        lines += ["", f"On the {comp['n_common']} samples evaluated by every system:", "",
                  "| Model | Prec | Rec | F1 |", "|---|---|---|---|"]
        for row in comp["rows"]:
            c = row["common"]
            lines.append(f"| {SYSTEM_NAMES.get(row['system'], row['system'])} | {c['precision']:.3f} "
                         f"| {c['recall']:.3f} | {c['f1']:.3f} |")
    return "\n".join(lines) + "\n"


def write_report(reports: Sequence[SystemReport], out_dir: str | Path, name: str = "report") -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"systems": [r.to_dict() for r in reports], "comparison": comparison(reports),
               "digests": {r.system: r.digest() for r in reports}}
    paths = {"json": out / f"{name}.json", "markdown": out / f"{name}.md"}
    paths["json"].write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    paths["markdown"].write_text(markdown_table(reports))
    return paths
