"""Teacher-forced pretraining of the toy backbone."""

from __future__ import annotations

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from ..audio import read_wav
from ..core import read_manifest, words_of
from .asr import EOT, PAD, SOT, Backbone, ConfigurationError, build_vocab, transcribe_batch
from .frontend import log_mel
from .model import BackboneConfig, ToyASR

log = logging.getLogger(__name__)


class PretrainingFailed(RuntimeError):
    pass


@dataclass
class PretrainConfig:
    d_model: int = 64
    n_encoder_layers: int = 4
    n_decoder_layers: int = 4
    n_heads: int = 4
    ffn_dim: int = 128
    batch_size: int = 32
    lr: float = 2e-3
    warmup_steps: int = 200
    max_steps: int = 6000
    eval_every: int = 250
    holdout_fraction: float = 0.1
    target_accuracy: float = 0.9
    min_accuracy: float = 0.6
    silence_fraction: float = 0.02
    max_eval_samples: int = 200

    @classmethod
    def from_file(cls, path: str | Path) -> "PretrainConfig":
        return cls(**json.loads(Path(path).read_text()))


@dataclass
class PretrainReport:
    steps: int = 0
    heldout_word_accuracy: float = 0.0
    history: list = field(default_factory=list)
    n_train: int = 0
    n_heldout: int = 0
    seconds: float = 0.0


@contextmanager
def deterministic_torch(seed: int):
    """Single-threaded, deterministic kernels for the duration of a training run."""
    prev_threads = torch.get_num_threads()
    prev_det = torch.are_deterministic_algorithms_enabled()
    torch.set_num_threads(1)
    torch.use_deterministic_algorithms(True)
    torch.manual_seed(seed)
    try:
        yield
    finally:
        torch.set_num_threads(prev_threads)
        torch.use_deterministic_algorithms(prev_det)


def word_error_count(ref: list[str], hyp: list[str]) -> int:
    """Levenshtein distance over words."""
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, 1):
        cur = [i] + [0] * len(hyp)
        for j, h in enumerate(hyp, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (r != h))
        prev = cur
    return prev[-1]


def word_accuracy(refs: list[str], hyps: list[str]) -> float:
    """1 - WER over a corpus (floored at 0)."""
    errors = total = 0
    for ref, hyp in zip(refs, hyps):
        r, h = words_of(ref), words_of(hyp)
        errors += word_error_count(r, h)
        total += len(r)
    return max(0.0, 1.0 - errors / max(total, 1))


def load_audio_features(manifest_path: str | Path):
    """Records of a manifest plus their log-mel features."""
    manifest_path = Path(manifest_path)
    records = read_manifest(manifest_path)
    mels = [log_mel(read_wav(manifest_path.parent / r.audio)[0]) for r in records]
    return records, mels


def _lr_at(step: int, cfg: PretrainConfig) -> float:
    if step < cfg.warmup_steps:
        return cfg.lr * (step + 1) / cfg.warmup_steps
    frac = (step - cfg.warmup_steps) / max(1, cfg.max_steps - cfg.warmup_steps)
    return cfg.lr * 0.5 * (1.0 + np.cos(np.pi * min(frac, 1.0)))


def pretrain_toy_backbone(manifest_path: str | Path, cfg: PretrainConfig | None = None,
                          seed: int = 0, data=None) -> tuple[Backbone, PretrainReport]:
    """Train on (audio, transcript) pairs until held-out word accuracy reaches
    ``cfg.target_accuracy`` or ``cfg.max_steps`` run out.

    Held-out sentences are chosen by sentence (both stress variants of a
    sentence land on the same side).  Raises :class:`PretrainingFailed` if
    the final accuracy is below ``cfg.min_accuracy``.
    """
    cfg = cfg or PretrainConfig()
    t0 = time.time()
    records, mels = data if data is not None else load_audio_features(manifest_path)
    if not records:
        raise ConfigurationError(f"{manifest_path}: manifest has no samples")

    model_cfg = BackboneConfig(d_model=cfg.d_model, n_encoder_layers=cfg.n_encoder_layers,
                               n_decoder_layers=cfg.n_decoder_layers, n_heads=cfg.n_heads,
                               ffn_dim=cfg.ffn_dim, vocab=build_vocab(r.text for r in records))
    rng = np.random.default_rng(seed)
    groups = sorted({r.id.rsplit("-v", 1)[0] for r in records})
    held_groups = set(rng.choice(groups, size=max(1, int(round(cfg.holdout_fraction * len(groups)))),
                                 replace=False).tolist()) if len(groups) > 1 else set()
    train_idx = [i for i, r in enumerate(records) if r.id.rsplit("-v", 1)[0] not in held_groups]
    held_idx = [i for i, r in enumerate(records) if r.id.rsplit("-v", 1)[0] in held_groups]
    held_idx = held_idx[: cfg.max_eval_samples]
    report = PretrainReport(n_train=len(train_idx), n_heldout=len(held_idx))

    with deterministic_torch(seed):
        model = ToyASR(model_cfg)
        backbone = Backbone(model, frozen=False)
        tok = backbone.token_to_id
        targets = [backbone.encode_text(r.text) + [tok[EOT]] for r in records]
        opt = torch.optim.AdamW(model.parameters(), lr=cfg.lr, weight_decay=0.01)

        def batches():
            while True:
                for start in range(0, len(train_idx), cfg.batch_size):
                    yield [train_idx[i] for i in perm[start: start + cfg.batch_size]]
                perm[:] = rng.permutation(len(train_idx))

        perm = rng.permutation(len(train_idx))
        stream = batches()
        step = 0
        while step < cfg.max_steps:
            model.train()
            idx = next(stream)
            feats = [mels[i] for i in idx]
            tgts = [targets[i] for i in idx]
            n_sil = int(rng.binomial(len(idx), cfg.silence_fraction))
            for _ in range(n_sil):
                feats.append(log_mel(np.zeros(int(rng.integers(4000, 40000)), dtype=np.float32)))
                tgts.append([tok[EOT]])
            loss = _teacher_forced_loss(model, feats, tgts, tok[SOT], tok[PAD])
            for g in opt.param_groups:
                g["lr"] = _lr_at(step, cfg)
            opt.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), 1.0)
            opt.step()
            step += 1
            if step % cfg.eval_every == 0 or step == cfg.max_steps:
                model.eval()
                acc = evaluate_word_accuracy(backbone, [records[i].text for i in held_idx],
                                             [mels[i] for i in held_idx])
                report.history.append({"step": step, "loss": float(loss.detach()), "heldout_word_accuracy": acc})
                log.info("step %d loss %.4f held-out word acc %.3f", step, float(loss.detach()), acc)
                report.heldout_word_accuracy = acc
                if acc >= cfg.target_accuracy:
                    break
        report.steps = step
    model.eval()
    backbone.freeze()
    report.seconds = time.time() - t0
    if report.heldout_word_accuracy < cfg.min_accuracy:
        raise PretrainingFailed(
            f"held-out word accuracy {report.heldout_word_accuracy:.3f} < {cfg.min_accuracy} after "
            f"{report.steps} steps; history: {report.history}")
    return backbone, report


def _teacher_forced_loss(model: ToyASR, feats, tgts, sot: int, pad: int) -> torch.Tensor:
    mel_len = torch.tensor([len(m) for m in feats])
    mel = torch.zeros(len(feats), int(mel_len.max()), feats[0].shape[1])
    for i, m in enumerate(feats):
        mel[i, : len(m)] = torch.from_numpy(m)
    n = max(len(t) for t in tgts)
    inp = torch.full((len(tgts), n), pad, dtype=torch.long)
    out = torch.full((len(tgts), n), -100, dtype=torch.long)
    for i, t in enumerate(tgts):
        inp[i, 0] = sot
        inp[i, 1: len(t)] = torch.tensor(t[:-1])
        out[i, : len(t)] = torch.tensor(t)
    _, xa, a_len = model.encoder(mel, mel_len)
    _, logits = model.decoder(inp, xa, a_len)
    return F.cross_entropy(logits.reshape(-1, logits.shape[-1]), out.reshape(-1), ignore_index=-100)


def evaluate_word_accuracy(backbone: Backbone, texts, mels, batch_size: int = 64) -> float:
    if not texts:
        return 0.0
    hyps = []
    for s in range(0, len(mels), batch_size):
        states = transcribe_batch(backbone, mels=mels[s: s + batch_size],
                                  encoder_layers=[], decoder_layers=[])
        hyps.extend(st.text for st in states)
    return word_accuracy(list(texts), hyps)
