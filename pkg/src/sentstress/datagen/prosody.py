"""Per-word prosody plans for stressed words and their SSML rendering."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from ..core import ContractViolation

RATE_RANGE = (30.0, 85.0)   # percent reduction of speaking rate
GAIN_RANGE = (3.0, 6.0)     # dB
PITCH_ST = 1.5
PITCH_RANGE = (1.0, 2.0)    # clamp after jitter
LENGTH_CLAMP = (2, 12)
JITTER_SIGMA = (5.0, 0.5, 0.15)  # rate pp, gain dB, pitch st

FEMALE_F0 = (180.0, 192.0, 205.0, 218.0, 230.0)
MALE_F0 = (95.0, 105.0, 116.0, 128.0, 140.0)
VOICES: dict[str, float] = {
    **{f"F{i + 1}": f0 for i, f0 in enumerate(FEMALE_F0)},
    **{f"M{i + 1}": f0 for i, f0 in enumerate(MALE_F0)},
}
VOICE_IDS = tuple(VOICES)


@dataclass(frozen=True)
class SynthesisPlan:
    words: tuple[str, ...]
    stress: tuple[int, ...]
    rate_reduction_pct: tuple[float, ...]
    gain_db: tuple[float, ...]
    pitch_st: tuple[float, ...]
    voice_id: str
    seed: int

    def __post_init__(self):
        n = len(self.words)
        for name in ("stress", "rate_reduction_pct", "gain_db", "pitch_st"):
            if len(getattr(self, name)) != n:
                raise ContractViolation(f"plan field {name} has wrong length")


def length_to_prosody(n_chars: int) -> tuple[float, float]:
    """Noise-free (rate reduction %, gain dB) for a stressed word.

    Linear in the clamped character length: the shortest words get the
    strongest slow-down and the largest gain.
    """
    lc = min(max(n_chars, LENGTH_CLAMP[0]), LENGTH_CLAMP[1])
    frac = (lc - LENGTH_CLAMP[0]) / (LENGTH_CLAMP[1] - LENGTH_CLAMP[0])
    return 85.0 - 55.0 * frac, 6.0 - 3.0 * frac


def build_synthesis_plan(words: Sequence[str], stress: Sequence[int], voice_id: str,
                         seed: int, noise_enabled: bool = False) -> SynthesisPlan:
    if len(words) != len(stress):
        raise ContractViolation("words and stress differ in length")
    if any(not w for w in words):
        raise ContractViolation("empty word in plan")
    if not any(stress):
        raise ContractViolation("plan needs at least one stressed word")
    if voice_id not in VOICES:
        raise ContractViolation(f"unknown voice {voice_id!r}")
    rates, gains, pitches = [], [], []
    for pos, (word, s) in enumerate(zip(words, stress)):
        if not s:
            rates.append(0.0)
            gains.append(0.0)
            pitches.append(0.0)
            continue
        rate, gain = length_to_prosody(len(word))
        pitch = PITCH_ST
        if noise_enabled:
            dr, dg, dp = np.random.default_rng([seed, pos]).standard_normal(3) * JITTER_SIGMA
            rate = float(np.clip(rate + dr, *RATE_RANGE))
            gain = float(np.clip(gain + dg, *GAIN_RANGE))
            pitch = float(np.clip(pitch + dp, *PITCH_RANGE))
        rates.append(rate)
        gains.append(gain)
        pitches.append(pitch)
    return SynthesisPlan(tuple(words), tuple(int(s) for s in stress), tuple(rates),
                         tuple(gains), tuple(pitches), voice_id, int(seed))


def emit_ssml(plan: SynthesisPlan) -> str:
    parts = []
    for word, s, rate, gain, pitch in zip(plan.words, plan.stress, plan.rate_reduction_pct,
                                          plan.gain_db, plan.pitch_st):
        text = escape(word)
        if s:
            parts.append(f'<prosody rate="{100.0 - rate:.1f}%" volume="{gain:+.1f}dB" '
                         f'pitch="{pitch:+.1f}st">{text}</prosody>')
        else:
            parts.append(text)
    return "<speak>" + " ".join(parts) + "</speak>"


def parse_ssml(doc: str) -> list[dict]:
    """Read back ``(word, rate %, volume dB, pitch st)`` for every prosody span."""
    root = ET.fromstring(doc)
    if root.tag != "speak":
        raise ValueError("SSML root must be <speak>")
    spans = []
    for el in root.iter("prosody"):
        spans.append({
            "word": el.text,
            "rate_pct": float(el.get("rate").rstrip("%")),
            "volume_db": float(el.get("volume").removesuffix("dB")),
            "pitch_st": float(el.get("pitch").removesuffix("st")),
        })
    return spans
