"""A small Whisper-shaped encoder-decoder.

Blocks are pre-norm residual: self-attention, optional cross-attention,
then a GELU feed-forward.  Layer 0 is the embedding output and layer k
the output of block k, for both stacks.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .frontend import N_MELS


@dataclass
class BackboneConfig:
    d_model: int = 64
    n_encoder_layers: int = 4
    n_decoder_layers: int = 4
    n_heads: int = 4
    ffn_dim: int = 128
    n_mels: int = N_MELS
    max_audio_frames: int = 1500   # after the stride-2 conv, i.e. 30 s
    max_tokens: int = 64
    vocab: tuple[str, ...] = ()

    def __post_init__(self):
        self.vocab = tuple(self.vocab)
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")

    @property
    def frames_per_second(self) -> float:
        return 50.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["vocab"] = list(self.vocab)
        return d


class MultiHeadAttention(nn.Module):
    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        self.n_heads = n_heads
        self.query = nn.Linear(d_model, d_model)
        self.key = nn.Linear(d_model, d_model, bias=False)
        self.value = nn.Linear(d_model, d_model)
        self.out = nn.Linear(d_model, d_model)

    def forward(self, x: Tensor, xa: Tensor | None = None, mask: Tensor | None = None) -> Tensor:
        """``mask`` is additive and broadcastable to (B, heads, T_q, T_k)."""
        src = x if xa is None else xa
        b, tq, d = x.shape
        h = self.n_heads
        q = self.query(x).view(b, tq, h, d // h).transpose(1, 2)
        k = self.key(src).view(b, src.shape[1], h, d // h).transpose(1, 2)
        v = self.value(src).view(b, src.shape[1], h, d // h).transpose(1, 2)
        scores = q @ k.transpose(-1, -2) / math.sqrt(d // h)
        if mask is not None:
            scores = scores + mask
        w = torch.softmax(scores, dim=-1)
        return self.out((w @ v).transpose(1, 2).reshape(b, tq, d))


class ResidualAttentionBlock(nn.Module):
    def __init__(self, d_model: int, n_heads: int, ffn_dim: int, cross_attention: bool = False,
                 dropout: float = 0.0):
        super().__init__()
        self.attn = MultiHeadAttention(d_model, n_heads)
        self.attn_ln = nn.LayerNorm(d_model)
        self.cross_attn = MultiHeadAttention(d_model, n_heads) if cross_attention else None
        self.cross_attn_ln = nn.LayerNorm(d_model) if cross_attention else None
        self.mlp = nn.Sequential(nn.Linear(d_model, ffn_dim), nn.GELU(), nn.Linear(ffn_dim, d_model))
        self.mlp_ln = nn.LayerNorm(d_model)
        self.drop = nn.Dropout(dropout)

    def forward(self, x: Tensor, xa: Tensor | None = None, mask: Tensor | None = None,
                cross_mask: Tensor | None = None) -> Tensor:
        x = x + self.drop(self.attn(self.attn_ln(x), mask=mask))
        if self.cross_attn is not None:
            x = x + self.drop(self.cross_attn(self.cross_attn_ln(x), xa, mask=cross_mask))
        return x + self.drop(self.mlp(self.mlp_ln(x)))


def sinusoids(length: int, channels: int, max_timescale: float = 10000.0) -> Tensor:
    inc = np.log(max_timescale) / (channels // 2 - 1)
    inv = torch.exp(-inc * torch.arange(channels // 2, dtype=torch.float32))
    t = torch.arange(length, dtype=torch.float32)[:, None] * inv[None, :]
    return torch.cat([torch.sin(t), torch.cos(t)], dim=1)


def causal_mask(n: int, dtype=torch.float32) -> Tensor:
    return torch.full((n, n), float("-inf"), dtype=dtype).triu(1)


def padding_mask(lengths: Tensor, total: int, dtype=torch.float32) -> Tensor:
    """Additive (B, 1, 1, total) mask hiding positions at or beyond ``lengths``."""
    keep = torch.arange(total)[None, :] < lengths[:, None]
    mask = torch.zeros(keep.shape, dtype=dtype).masked_fill(~keep, float("-inf"))
    return mask[:, None, None, :]


class AudioEncoder(nn.Module):
    def __init__(self, cfg: BackboneConfig):
        super().__init__()
        self.conv1 = nn.Conv1d(cfg.n_mels, cfg.d_model, 3, padding=1)
        self.conv2 = nn.Conv1d(cfg.d_model, cfg.d_model, 3, stride=2, padding=1)
        self.register_buffer("positional_embedding", sinusoids(cfg.max_audio_frames, cfg.d_model),
                             persistent=False)
        self.blocks = nn.ModuleList(
            ResidualAttentionBlock(cfg.d_model, cfg.n_heads, cfg.ffn_dim)
            for _ in range(cfg.n_encoder_layers))
        self.ln_post = nn.LayerNorm(cfg.d_model)

    @staticmethod
    def output_lengths(mel_lengths: Tensor) -> Tensor:
        return (mel_lengths - 1) // 2 + 1

    def forward(self, mel: Tensor, mel_lengths: Tensor) -> tuple[list[Tensor], Tensor, Tensor]:
        """``mel`` is (B, T, n_mels).  Returns per-layer states, the normed
        top output, and frame lengths."""
        x = F.gelu(self.conv1(mel.transpose(1, 2)))
        x = F.gelu(self.conv2(x)).transpose(1, 2)
        x = x + self.positional_embedding[: x.shape[1]]
        lengths = self.output_lengths(mel_lengths)
        mask = padding_mask(lengths, x.shape[1], x.dtype)
        states = [x]
        for block in self.blocks:
            x = block(x, mask=mask)
            states.append(x)
        return states, self.ln_post(x), lengths


class TextDecoder(nn.Module):
    def __init__(self, cfg: BackboneConfig):
        super().__init__()
        self.token_embedding = nn.Embedding(len(cfg.vocab), cfg.d_model)
        self.positional_embedding = nn.Parameter(torch.empty(cfg.max_tokens, cfg.d_model).normal_(0, 0.02))
        self.blocks = nn.ModuleList(
            ResidualAttentionBlock(cfg.d_model, cfg.n_heads, cfg.ffn_dim, cross_attention=True)
            for _ in range(cfg.n_decoder_layers))
        self.ln = nn.LayerNorm(cfg.d_model)

    def forward(self, tokens: Tensor, xa: Tensor, audio_lengths: Tensor) -> tuple[list[Tensor], Tensor]:
        n = tokens.shape[1]
        x = self.token_embedding(tokens) + self.positional_embedding[:n]
        mask = causal_mask(n, x.dtype)
        cross_mask = padding_mask(audio_lengths, xa.shape[1], x.dtype)
        states = [x]
        for block in self.blocks:
            x = block(x, xa, mask=mask, cross_mask=cross_mask)
            states.append(x)
        logits = self.ln(x) @ self.token_embedding.weight.T
        return states, logits


class ToyASR(nn.Module):
    def __init__(self, cfg: BackboneConfig):
        super().__init__()
        self.cfg = cfg
        self.encoder = AudioEncoder(cfg)
        self.decoder = TextDecoder(cfg)
