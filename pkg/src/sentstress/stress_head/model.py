"""The stress-detection head: one cross-attending decoder block and a
two-layer classifier producing per-token stressed/unstressed logits."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import Tensor, nn

from ..backbone.model import ResidualAttentionBlock, causal_mask, padding_mask
from ..core import ContractViolation


@dataclass
class HeadConfig:
    input_layer_enc: int = 3
    input_layer_dec: int = 3
    d_model: int = 64
    n_heads: int = 4
    ffn_dim: int = 128
    classifier_hidden: int = 64
    dropout: float = 0.0
    use_block: bool = True
    causal: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def count_head_parameters(cfg: HeadConfig) -> int:
    """Closed-form trainable-parameter count of :class:`StressHead`."""
    d, f, h = cfg.d_model, cfg.ffn_dim, cfg.classifier_hidden
    classifier = d * h + h + h * 2 + 2
    if not cfg.use_block:
        return classifier
    attention = 4 * d * d + 3 * d          # q, v, out carry biases; k does not
    norms = 3 * 2 * d
    mlp = d * f + f + f * d + d
    return 2 * attention + norms + mlp + classifier


class StressHead(nn.Module):
    def __init__(self, cfg: HeadConfig):
        super().__init__()
        self.cfg = cfg
        self.block = (ResidualAttentionBlock(cfg.d_model, cfg.n_heads, cfg.ffn_dim,
                                             cross_attention=True, dropout=cfg.dropout)
                      if cfg.use_block else None)
        self.classifier = nn.Sequential(
            nn.Linear(cfg.d_model, cfg.classifier_hidden), nn.ReLU(),
            nn.Dropout(cfg.dropout), nn.Linear(cfg.classifier_hidden, 2))

    def forward(self, enc_states: Tensor, dec_states: Tensor,
                enc_lengths: Tensor | None = None) -> Tensor:
        """(B, T_a, d) and (B, T_t, d) states -> (B, T_t, 2) logits.

        Unbatched 2-D inputs are accepted and give 2-D logits.
        """
        squeeze = dec_states.dim() == 2
        if squeeze:
            enc_states, dec_states = enc_states[None], dec_states[None]
        if enc_states.shape[-1] != self.cfg.d_model or dec_states.shape[-1] != self.cfg.d_model:
            raise ContractViolation(
                f"state width {enc_states.shape[-1]}/{dec_states.shape[-1]} != d_model {self.cfg.d_model}")
        x = dec_states
        if self.block is not None:
            if enc_lengths is None:
                enc_lengths = torch.full((enc_states.shape[0],), enc_states.shape[1])
            mask = causal_mask(x.shape[1], x.dtype) if self.cfg.causal else None
            x = self.block(x, enc_states, mask=mask,
                           cross_mask=padding_mask(enc_lengths, enc_states.shape[1], x.dtype))
        logits = self.classifier(x)
        return logits[0] if squeeze else logits


def head_forward(enc_states, dec_states, head: StressHead):
    """Functional wrapper: numpy or torch states in, logits out (same kind)."""
    as_numpy = not isinstance(dec_states, Tensor)
    enc = torch.as_tensor(enc_states, dtype=torch.float32) if as_numpy else enc_states
    dec = torch.as_tensor(dec_states, dtype=torch.float32) if as_numpy else dec_states
    with torch.set_grad_enabled(not as_numpy):
        out = head(enc, dec)
    return out.detach().numpy() if as_numpy else out
