"""Packaging labeled, synthesized sentences into WAV files plus JSONL manifests."""

from __future__ import annotations

import json
import logging
import zlib
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..audio import write_wav
from ..core import ManifestRecord, split_into_sentences, write_manifest
from .labeling import ProviderError, RuleBasedProvider, SkipSample, StressLabelProvider, select_stress_words
from .prosody import VOICE_IDS, build_synthesis_plan
from .synth import SpeechSynthesizer, ToySynthesizer

log = logging.getLogger(__name__)


@dataclass
class DatagenConfig:
    sentences_path: str | None = None
    n_sentences: int = 100
    train_fraction: float = 0.9
    seed: int = 0
    out_dir: str = "data"
    noise: bool = True
    provider: str = "rule"

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "DatagenConfig":
        data = json.loads(Path(path).read_text())
        base = Path(path).parent
        if data.get("sentences_path") and not Path(data["sentences_path"]).is_absolute():
            data["sentences_path"] = str(base / data["sentences_path"])
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


@dataclass
class GenerationReport:
    produced: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)
    sentences_used: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


@dataclass
class DatasetPaths:
    train: Path
    test: Path
    report: Path


def sample_rng(seed: int, key: str) -> np.random.Generator:
    """Per-sample generator; independent of the order samples are produced in."""
    return np.random.default_rng([seed, zlib.crc32(key.encode("utf-8"))])


def _load_sentences(cfg: DatagenConfig) -> list[str]:
    if cfg.sentences_path:
        text = Path(cfg.sentences_path).read_text(encoding="utf-8")
    else:
        from .corpus import toy_story_text
        text = toy_story_text(cfg.n_sentences + cfg.n_sentences // 4 + 10, seed=cfg.seed)
    return split_into_sentences(text)[: cfg.n_sentences]


def generate_dataset(cfg: DatagenConfig, provider: StressLabelProvider | None = None,
                     synthesizer: SpeechSynthesizer | None = None) -> DatasetPaths:
    """Write ``train.jsonl``, ``test.jsonl``, WAVs and ``report.json`` under ``cfg.out_dir``.

    Training sentences contribute both stress variants, test sentences one
    variant chosen at random.
    """
    out = Path(cfg.out_dir)
    try:
        (out / "audio").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RuntimeError(f"cannot write to output directory {out}: {exc}") from exc
    if provider is None:
        if cfg.provider != "rule":
            raise ValueError(f"provider {cfg.provider!r} needs a client object; only 'rule' runs offline")
        provider = RuleBasedProvider()
    synthesizer = synthesizer or ToySynthesizer()

    sentences = _load_sentences(cfg)
    order = np.random.default_rng(cfg.seed).permutation(len(sentences))
    n_train = int(round(cfg.train_fraction * len(sentences)))
    split_of = {int(i): ("train" if rank < n_train else "test") for rank, i in enumerate(order)}

    records: dict[str, list[ManifestRecord]] = {"train": [], "test": []}
    skipped: Counter = Counter()
    for idx, sentence in enumerate(sentences):
        sid = f"s{idx:05d}"
        split = split_of[idx]
        try:
            variants = select_stress_words(sentence, provider, sid)
        except SkipSample as exc:
            log.info("skipping %s: %s", sid, exc.reason)
            skipped[exc.reason] += 1
            continue
        except ProviderError as exc:
            log.warning("provider failed for %s: %s", sid, exc)
            skipped["provider_error"] += 1
            continue
        if split == "test":
            pick = int(sample_rng(cfg.seed, sid + "/variant").integers(2))
            variants = (variants[pick],)
        for ann in variants:
            rng = sample_rng(cfg.seed, ann.id)
            voice = VOICE_IDS[int(rng.integers(len(VOICE_IDS)))]
            plan_seed = int(rng.integers(2**31 - 1))
            plan = build_synthesis_plan(ann.words, ann.stress, voice, plan_seed, cfg.noise)
            try:
                sample = synthesizer.synthesize(plan, ann.text)
            except Exception as exc:
                log.warning("synthesis failed for %s: %s", ann.id, exc)
                skipped["synthesis_error"] += 1
                continue
            rel = Path("audio") / split / f"{ann.id}.wav"
            (out / rel).parent.mkdir(parents=True, exist_ok=True)
            write_wav(out / rel, sample.waveform, sample.sample_rate_hz)
            records[split].append(ManifestRecord(
                id=ann.id, text=ann.text, words=list(ann.words), stress=list(ann.stress),
                variant=ann.variant, audio=rel.as_posix(),
                word_start_s=[round(t, 6) for t in sample.word_start_s], voice=voice))

    paths = DatasetPaths(write_manifest(out / "train.jsonl", records["train"]),
                         write_manifest(out / "test.jsonl", records["test"]),
                         out / "report.json")
    report = GenerationReport(
        produced={k: len(v) for k, v in records.items()}, skipped=dict(skipped),
        sentences_used=len(sentences))
    paths.report.write_text(report.to_json() + "\n")
    return paths
