"""Frozen backbone wrapper: vocabulary, checkpoints, greedy decoding with
per-layer hidden states."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import torch

from ..checkpoint import load_checkpoint, load_into, module_params, parameter_digest, save_checkpoint
from ..core import detokenize, tokenize, word_index_from_tokens
from .frontend import log_mel
from .model import BackboneConfig, ToyASR

PAD, SOT, EOT, UNK = "<pad>", "<sot>", "<eot>", "<unk>"
SPECIALS = (PAD, SOT, EOT, UNK)


class ConfigurationError(ValueError):
    pass


def build_vocab(texts: Iterable[str]) -> tuple[str, ...]:
    counts = Counter()
    for text in texts:
        counts.update(tokenize(text)[0])
    ordered = sorted(counts, key=lambda t: (-counts[t], t))
    return SPECIALS + tuple(ordered)


@dataclass
class LayeredStates:
    """Hidden states of one decoded utterance.

    ``encoder_states[k]`` is (frames, d) and ``decoder_states[k]`` is
    (len(tokens), d); the decoder state at position i is the one whose input
    is ``tokens[i]``.
    """

    encoder_states: list[np.ndarray]
    decoder_states: list[np.ndarray]
    tokens: list[int]
    token_strings: list[str] = field(default_factory=list)
    truncated: bool = False

    @property
    def text(self) -> str:
        return detokenize(self.token_strings).strip()

    @property
    def word_index(self) -> list[int]:
        return word_index_from_tokens(self.token_strings)


class Backbone:
    """A toy encoder-decoder ASR model whose weights never change after pretraining."""

    def __init__(self, model: ToyASR, frozen: bool = True):
        self.model = model
        self.cfg = model.cfg
        self.token_to_id = {t: i for i, t in enumerate(self.cfg.vocab)}
        self.model.eval()
        if frozen:
            self.freeze()

    def freeze(self) -> None:
        for p in self.model.parameters():
            p.requires_grad_(False)

    @property
    def frozen(self) -> bool:
        return not any(p.requires_grad for p in self.model.parameters())

    @property
    def n_encoder_layers(self) -> int:
        return self.cfg.n_encoder_layers

    @property
    def n_decoder_layers(self) -> int:
        return self.cfg.n_decoder_layers

    def digest(self) -> str:
        return parameter_digest(module_params(self.model))

    def encode_text(self, text: str) -> list[int]:
        unk = self.token_to_id[UNK]
        return [self.token_to_id.get(t, unk) for t in tokenize(text)[0]]

    def save(self, path: str | Path, meta: dict | None = None) -> Path:
        return save_checkpoint(path, "backbone", self.cfg.to_dict(), module_params(self.model),
                               meta=meta, frozen=True)

    @classmethod
    def load(cls, path: str | Path) -> "Backbone":
        header, params = load_checkpoint(path, "backbone")
        model = ToyASR(BackboneConfig(**header["config"]))
        load_into(model, params)
        return cls(model, frozen=True)


def select_head_input_layer(n_layers: int, override: int | None = None) -> int:
    """Three quarters of the depth by default (layer 9 of 12)."""
    layer = int(np.floor(0.75 * n_layers + 0.5)) if override is None else int(override)
    if not 1 <= layer <= n_layers:
        raise ConfigurationError(f"layer {layer} outside [1, {n_layers}]")
    return layer


def _pad_mels(mels: Sequence[np.ndarray], max_frames: int) -> tuple[torch.Tensor, torch.Tensor]:
    mels = [m[: 2 * max_frames] for m in mels]
    lengths = torch.tensor([len(m) for m in mels])
    out = torch.zeros(len(mels), int(lengths.max()), mels[0].shape[1])
    for i, m in enumerate(mels):
        out[i, : len(m)] = torch.from_numpy(m)
    return out, lengths


@torch.no_grad()
def transcribe_batch(backbone: Backbone, waveforms: Sequence[np.ndarray] | None = None, *,
                     mels: Sequence[np.ndarray] | None = None, max_new_tokens: int | None = None,
                     encoder_layers: Sequence[int] | None = None,
                     decoder_layers: Sequence[int] | None = None) -> list[LayeredStates]:
    """Greedy-decode a batch and collect hidden states.

    ``encoder_layers``/``decoder_layers`` restrict which layers are kept
    (all by default).  No timestamps are produced.
    """
    cfg = backbone.cfg
    model = backbone.model
    if mels is None:
        mels = [log_mel(w) for w in waveforms]
    max_new = min(max_new_tokens or cfg.max_tokens - 1, cfg.max_tokens - 1)
    enc_keep = range(cfg.n_encoder_layers + 1) if encoder_layers is None else encoder_layers
    dec_keep = range(cfg.n_decoder_layers + 1) if decoder_layers is None else decoder_layers
    sot, eot, pad = (backbone.token_to_id[t] for t in (SOT, EOT, PAD))

    mel, mel_len = _pad_mels(mels, cfg.max_audio_frames)
    enc_states, xa, a_len = model.encoder(mel, mel_len)
    b = len(mels)
    seq = torch.full((b, 1), sot, dtype=torch.long)
    done = torch.zeros(b, dtype=torch.bool)
    for _ in range(max_new):
        _, logits = model.decoder(seq, xa, a_len)
        step_logits = logits[:, -1].clone()
        step_logits[:, [sot, pad]] = -torch.inf   # never generated
        nxt = step_logits.argmax(-1)
        nxt = torch.where(done, torch.full_like(nxt, pad), nxt)
        seq = torch.cat([seq, nxt[:, None]], dim=1)
        done |= nxt == eot
        if bool(done.all()):
            break
    gen = [[int(t) for t in row[1:]] for row in seq]
    results_tokens, truncated = [], []
    for row in gen:
        if eot in row:
            results_tokens.append(row[: row.index(eot)])
            truncated.append(False)
        else:
            results_tokens.append(row)
            truncated.append(True)
    # one teacher-forced pass over <sot> + generated tokens for aligned states
    n_max = max(len(t) for t in results_tokens) + 1
    inp = torch.full((b, n_max), pad, dtype=torch.long)
    inp[:, 0] = sot
    for i, toks in enumerate(results_tokens):
        inp[i, 1: len(toks) + 1] = torch.tensor(toks, dtype=torch.long)
    dec_states, _ = model.decoder(inp, xa, a_len)
    out = []
    vocab = cfg.vocab
    for i, toks in enumerate(results_tokens):
        n = len(toks)
        out.append(LayeredStates(
            encoder_states=[enc_states[k][i, : int(a_len[i])].numpy().copy() for k in enc_keep],
            decoder_states=[dec_states[k][i, 1: n + 1].numpy().copy() for k in dec_keep],
            tokens=toks, token_strings=[vocab[t] for t in toks], truncated=truncated[i]))
    return out


def transcribe_with_states(backbone: Backbone, waveform: np.ndarray, **kwargs) -> LayeredStates:
    return transcribe_batch(backbone, [waveform], **kwargs)[0]


def encoder_states(backbone: Backbone, waveforms: Sequence[np.ndarray]) -> list[list[np.ndarray]]:
    """Per-layer encoder states only (no decoding)."""
    with torch.no_grad():
        mel, mel_len = _pad_mels([log_mel(w) for w in waveforms], backbone.cfg.max_audio_frames)
        states, _, a_len = backbone.model.encoder(mel, mel_len)
    return [[s[i, : int(a_len[i])].numpy().copy() for s in states] for i in range(len(waveforms))]
