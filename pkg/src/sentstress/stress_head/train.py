"""Training the stress head on top of a frozen backbone, and inference."""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

from ..backbone.asr import Backbone, ConfigurationError, select_head_input_layer, transcribe_batch
from ..backbone.train import deterministic_torch, load_audio_features
from ..checkpoint import load_checkpoint, load_into, module_params, save_checkpoint
from ..core import ManifestRecord, Rejected, aggregate_token_to_word, align_stress_labels
from .model import HeadConfig, StressHead

log = logging.getLogger(__name__)

THRESHOLD = 0.5


class HeadTrainingAborted(RuntimeError):
    pass


@dataclass
class TrainingReport:
    epoch_losses: list[float] = field(default_factory=list)
    n_samples: int = 0
    n_used: int = 0
    n_rejected: int = 0
    rejected_ids: list[str] = field(default_factory=list)
    n_truncated: int = 0
    backbone_digest_before: str = ""
    backbone_digest_after: str = ""
    seconds: float = 0.0


@dataclass
class HeadExample:
    """One aligned training example: input-layer states plus token labels."""

    sample_id: str
    enc: np.ndarray
    dec: np.ndarray
    labels: np.ndarray
    tokens: list[str]


class TrainedHead:
    def __init__(self, module: StressHead, backbone_digest: str = ""):
        self.module = module
        self.cfg = module.cfg
        self.backbone_digest = backbone_digest
        module.eval()

    def save(self, path: str | Path, meta: dict | None = None) -> Path:
        cfg = self.cfg.to_dict() | {"backbone_digest": self.backbone_digest}
        return save_checkpoint(path, "stress_head", cfg, module_params(self.module), meta=meta)

    @classmethod
    def load(cls, path: str | Path) -> "TrainedHead":
        header, params = load_checkpoint(path, "stress_head")
        cfg = dict(header["config"])
        digest = cfg.pop("backbone_digest", "")
        module = StressHead(HeadConfig(**cfg))
        load_into(module, params)
        return cls(module, digest)


def default_head_config(backbone: Backbone, layer: int | str | None = "auto",
                        enc_layer: int | None = None, **overrides) -> HeadConfig:
    dec = select_head_input_layer(backbone.n_decoder_layers, None if layer in (None, "auto") else int(layer))
    enc = select_head_input_layer(backbone.n_encoder_layers,
                                  enc_layer if enc_layer is not None else
                                  (None if layer in (None, "auto") else int(layer)))
    d = backbone.cfg.d_model
    base = dict(input_layer_enc=enc, input_layer_dec=dec, d_model=d, n_heads=backbone.cfg.n_heads,
                ffn_dim=backbone.cfg.ffn_dim, classifier_hidden=d)
    base.update(overrides)
    return HeadConfig(**base)


def check_compatible(backbone: Backbone, cfg: HeadConfig, head_digest: str = "") -> None:
    if cfg.d_model != backbone.cfg.d_model:
        raise ConfigurationError(f"head d_model {cfg.d_model} != backbone {backbone.cfg.d_model}")
    if not 0 <= cfg.input_layer_enc <= backbone.n_encoder_layers:
        raise ConfigurationError(f"encoder layer {cfg.input_layer_enc} not in backbone")
    if not 0 <= cfg.input_layer_dec <= backbone.n_decoder_layers:
        raise ConfigurationError(f"decoder layer {cfg.input_layer_dec} not in backbone")
    if head_digest and head_digest != backbone.digest():
        warnings.warn("head was trained on a different backbone", stacklevel=2)


def collect_states(backbone: Backbone, mels: Sequence[np.ndarray], enc_layers: Sequence[int],
                   dec_layers: Sequence[int], batch_size: int = 64):
    out = []
    for s in range(0, len(mels), batch_size):
        out.extend(transcribe_batch(backbone, mels=mels[s: s + batch_size],
                                    encoder_layers=enc_layers, decoder_layers=dec_layers))
    return out


def build_examples(records: Sequence[ManifestRecord], states, enc_pos: int = 0, dec_pos: int = 0):
    """Align gold word labels to each transcription; returns examples and rejections."""
    examples, rejected = [], []
    for rec, st in zip(records, states):
        aligned = align_stress_labels(rec.sentence(), st.token_strings, st.word_index)
        if isinstance(aligned, Rejected):
            rejected.append(rec.id)
            continue
        examples.append(HeadExample(rec.id, st.encoder_states[enc_pos], st.decoder_states[dec_pos],
                                    np.asarray(aligned.token_labels, dtype=np.int64),
                                    list(aligned.tokens)))
    return examples, rejected


def _batch(examples: Sequence[HeadExample]):
    d = examples[0].enc.shape[1]
    ta = max(len(e.enc) for e in examples)
    tt = max(len(e.dec) for e in examples)
    enc = torch.zeros(len(examples), ta, d)
    dec = torch.zeros(len(examples), tt, d)
    labels = torch.full((len(examples), tt), -100, dtype=torch.long)
    enc_len = torch.tensor([len(e.enc) for e in examples])
    for i, e in enumerate(examples):
        enc[i, : len(e.enc)] = torch.from_numpy(e.enc)
        dec[i, : len(e.dec)] = torch.from_numpy(e.dec)
        labels[i, : len(e.labels)] = torch.from_numpy(e.labels)
    return enc, dec, enc_len, labels


def fit_head(examples: Sequence[HeadExample], cfg: HeadConfig, epochs: int = 4, seed: int = 0,
             batch_size: int = 16, lr: float = 1e-3, class_weighting: bool = False):
    """Token-level cross-entropy training; returns the module and per-epoch mean losses."""
    if not examples:
        raise HeadTrainingAborted("no usable training examples")
    with deterministic_torch(seed):
        head = StressHead(cfg)
        opt = torch.optim.AdamW(head.parameters(), lr=lr, weight_decay=0.01)
        rng = np.random.default_rng(seed)
        weight = None
        if class_weighting:
            pos = sum(int(e.labels.sum()) for e in examples)
            tot = sum(len(e.labels) for e in examples)
            weight = torch.tensor([tot / (2 * (tot - pos)), tot / (2 * max(pos, 1))])
        losses = []
        for _ in range(epochs):
            head.train()
            order = rng.permutation(len(examples))
            total, count = 0.0, 0
            for s in range(0, len(order), batch_size):
                enc, dec, enc_len, labels = _batch([examples[i] for i in order[s: s + batch_size]])
                logits = head(enc, dec, enc_len)
                loss = F.cross_entropy(logits.reshape(-1, 2), labels.reshape(-1), weight=weight,
                                       ignore_index=-100)
                opt.zero_grad()
                loss.backward()
                opt.step()
                n = int((labels != -100).sum())
                total += float(loss.detach()) * n
                count += n
            losses.append(total / max(count, 1))
            log.info("head epoch %d loss %.4f", len(losses), losses[-1])
        head.eval()
    return head, losses


def train_head(backbone: Backbone, manifest_path: str | Path, cfg: HeadConfig | None = None,
               epochs: int = 4, seed: int = 0, data=None, states=None,
               **fit_kwargs) -> tuple[TrainedHead, TrainingReport]:
    """Train a head on one manifest with the backbone frozen.

    Samples whose transcription has a different word count than the gold
    sentence are skipped and counted; more than half skipped aborts.
    """
    t0 = time.time()
    cfg = cfg or default_head_config(backbone)
    check_compatible(backbone, cfg)
    if not backbone.frozen:
        raise ConfigurationError("backbone must be frozen before head training")
    report = TrainingReport(backbone_digest_before=backbone.digest())
    records, mels = data if data is not None else load_audio_features(manifest_path)
    if states is None:
        states = collect_states(backbone, mels, [cfg.input_layer_enc], [cfg.input_layer_dec])
        enc_pos = dec_pos = 0
    else:
        enc_pos, dec_pos = cfg.input_layer_enc, cfg.input_layer_dec
    examples, rejected = build_examples(records, states, enc_pos, dec_pos)
    report.n_samples = len(records)
    report.n_rejected = len(rejected)
    report.rejected_ids = rejected
    report.n_used = len(examples)
    report.n_truncated = sum(st.truncated for st in states)
    if len(rejected) > 0.5 * len(records):
        raise HeadTrainingAborted(
            f"{len(rejected)}/{len(records)} samples failed the word-count filter; "
            "the backbone transcribes this data too poorly")
    head, losses = fit_head(examples, cfg, epochs, seed, **fit_kwargs)
    report.epoch_losses = losses
    report.backbone_digest_after = backbone.digest()
    report.seconds = time.time() - t0
    return TrainedHead(head, report.backbone_digest_before), report


@dataclass
class StressedTranscript:
    text: str
    words: list[str]
    word_stress: list[int]
    token_scores: list[float]
    tokens: list[str] = field(default_factory=list)
    word_index: list[int] = field(default_factory=list)
    truncated: bool = False

    def render(self) -> str:
        """Transcript with stressed words wrapped in asterisks."""
        pieces = []
        for i, (tok, w) in enumerate(zip(self.tokens, self.word_index)):
            stressed = w >= 0 and self.word_stress[w]
            if stressed and (i == 0 or self.word_index[i - 1] != w):
                body = tok.lstrip()
                tok = tok[: len(tok) - len(body)] + "*" + body
            if stressed and (i + 1 == len(self.tokens) or self.word_index[i + 1] != w):
                tok += "*"
            pieces.append(tok)
        return "".join(pieces).strip()


def group_words(tokens: Sequence[str], word_index: Sequence[int]) -> list[str]:
    words = [""] * (max(word_index, default=-1) + 1)
    for tok, w in zip(tokens, word_index):
        if w >= 0:
            words[w] += tok
    return [w.strip() for w in words]


def scores_to_transcript(state, token_scores: np.ndarray) -> StressedTranscript:
    word_index = state.word_index
    flags = [int(s >= THRESHOLD) for s in token_scores]
    return StressedTranscript(text=state.text, words=group_words(state.token_strings, word_index),
                              word_stress=aggregate_token_to_word(flags, word_index),
                              token_scores=[float(s) for s in token_scores],
                              tokens=list(state.token_strings), word_index=word_index,
                              truncated=state.truncated)


def _score(head: TrainedHead, state, enc_pos: int, dec_pos: int) -> np.ndarray:
    if len(state.tokens) == 0:
        return np.zeros(0)
    with torch.no_grad():
        logits = head.module(torch.from_numpy(state.encoder_states[enc_pos]),
                             torch.from_numpy(state.decoder_states[dec_pos]))
        return torch.softmax(logits, dim=-1)[:, 1].numpy().astype(np.float64)


def predict(backbone: Backbone, head: TrainedHead, waveform: np.ndarray) -> StressedTranscript:
    """Transcribe audio and mark stressed words; uses nothing but the waveform."""
    check_compatible(backbone, head.cfg, head.backbone_digest)
    state = transcribe_batch(backbone, [np.asarray(waveform, dtype=np.float32)],
                             encoder_layers=[head.cfg.input_layer_enc],
                             decoder_layers=[head.cfg.input_layer_dec])[0]
    return scores_to_transcript(state, _score(head, state, 0, 0))


def predict_batch(backbone: Backbone, head: TrainedHead, mels: Sequence[np.ndarray],
                  batch_size: int = 64) -> list[StressedTranscript]:
    check_compatible(backbone, head.cfg, head.backbone_digest)
    states = collect_states(backbone, mels, [head.cfg.input_layer_enc], [head.cfg.input_layer_dec],
                            batch_size)
    return [scores_to_transcript(st, _score(head, st, 0, 0)) for st in states]
