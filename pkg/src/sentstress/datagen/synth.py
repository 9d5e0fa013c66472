"""Offline parametric speech for synthesis plans, plus the remote-TTS client shape.

Each word is a harmonic tone on the voice's fundamental (three harmonics,
1/k amplitudes).  So that words are tellable apart by an ASR model, every
character also lights up a fixed three-formant pattern realised on
harmonics of the same fundamental; periodicity, and hence measured F0,
is unaffected.
"""

from __future__ import annotations

import base64
import time
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from ..audio import SAMPLE_RATE
from ..core import ContractViolation
from .prosody import VOICES, SynthesisPlan, emit_ssml

BASE_AMPLITUDE = 0.1
SEC_PER_CHAR = 0.060
GAP_S = 0.080
EDGE_S = 0.080
RAMP_S = 0.010
N_HARMONICS = 3

FORMANT_BANDS = ((500.0, 900.0, 1300.0, 1700.0),
                 (2100.0, 2500.0, 2900.0, 3300.0),
                 (3700.0, 4100.0, 4500.0, 4900.0))
FORMANT_AMPLITUDE = 0.2
_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789'"


def char_formants(ch: str) -> tuple[float, float, float]:
    """Fixed formant triple for a character (case-insensitive)."""
    idx = _ALPHABET.find(ch.lower())
    if idx < 0:
        idx = len(_ALPHABET)
    return (FORMANT_BANDS[0][idx % 4], FORMANT_BANDS[1][(idx // 4) % 4],
            FORMANT_BANDS[2][(idx // 16) % 4])


@dataclass
class SpeechSample:
    waveform: np.ndarray
    sample_rate_hz: int
    transcript: str
    word_start_s: list[float]
    duration_s: float
    word_duration_s: list[float] | None = None


class SpeechSynthesizer(Protocol):
    def synthesize(self, plan: SynthesisPlan, transcript: str | None = None) -> SpeechSample: ...


def word_duration(word: str, rate_reduction_pct: float) -> float:
    return SEC_PER_CHAR * len(word) / (1.0 - rate_reduction_pct / 100.0)


def _render_word(word: str, n: int, f0: float, amp: float, sr: int) -> np.ndarray:
    t = np.arange(n) / sr
    n_harm = int((FORMANT_BANDS[2][-1] + f0) // f0)
    k = np.arange(1, n_harm + 1)
    # per-character harmonic amplitude table: base 1/k for k <= 3 plus formant peaks
    per_char = np.zeros((len(word), n_harm))
    per_char[:, :N_HARMONICS] = 1.0 / k[:N_HARMONICS]
    for ci, ch in enumerate(word):
        for formant in char_formants(ch):
            per_char[ci] += FORMANT_AMPLITUDE * np.clip(1.0 - np.abs(k * f0 - formant) / f0, 0.0, None)
    used = per_char.any(axis=0)
    char_of_sample = np.minimum((np.arange(n) * len(word)) // n, len(word) - 1)
    harmonics = np.sin(2.0 * np.pi * f0 * np.outer(t, k[used]))
    sig = amp * np.einsum("nk,nk->n", harmonics, per_char[:, used][char_of_sample])
    ramp = min(int(round(RAMP_S * sr)), n // 2)
    if ramp > 0:
        window = np.hanning(2 * ramp)
        sig[:ramp] *= window[:ramp]
        sig[-ramp:] *= window[ramp:]
    return sig


class ToySynthesizer:
    """Deterministic offline renderer at 16 kHz."""

    def __init__(self, sample_rate: int = SAMPLE_RATE):
        self.sample_rate = sample_rate

    def synthesize(self, plan: SynthesisPlan, transcript: str | None = None) -> SpeechSample:
        if plan.voice_id not in VOICES:
            raise ContractViolation(f"unknown voice {plan.voice_id!r}")
        sr = self.sample_rate
        base_f0 = VOICES[plan.voice_id]
        pieces = [np.zeros(int(round(EDGE_S * sr)))]
        cursor = len(pieces[0])
        gap = np.zeros(int(round(GAP_S * sr)))
        starts, durations = [], []
        for i, word in enumerate(plan.words):
            if i:
                pieces.append(gap)
                cursor += len(gap)
            n = int(round(word_duration(word, plan.rate_reduction_pct[i]) * sr))
            f0 = base_f0 * 2.0 ** (plan.pitch_st[i] / 12.0)
            amp = BASE_AMPLITUDE * 10.0 ** (plan.gain_db[i] / 20.0)
            starts.append(cursor / sr)
            durations.append(n / sr)
            pieces.append(_render_word(word, n, f0, amp, sr))
            cursor += n
        pieces.append(np.zeros(int(round(EDGE_S * sr))))
        wave = np.concatenate(pieces).astype(np.float32)
        return SpeechSample(wave, sr, transcript if transcript is not None else " ".join(plan.words),
                            starts, len(wave) / sr, durations)


def synthesize_toy(plan: SynthesisPlan, transcript: str | None = None) -> SpeechSample:
    return ToySynthesizer().synthesize(plan, transcript)


@dataclass(frozen=True)
class TTSRequest:
    ssml: str
    voice: str
    sample_rate_hz: int
    enable_word_timepoints: bool = True


@dataclass(frozen=True)
class TTSResponse:
    audio_content: str          # base64, little-endian 16-bit PCM mono
    timepoints_s: tuple[float, ...]


class RemoteTTSClient:
    """Cloud TTS client driven by SSML; the transport is supplied by the caller."""

    def __init__(self, transport: Callable[[TTSRequest], TTSResponse], *,
                 voice_names: dict[str, str] | None = None, sample_rate: int = SAMPLE_RATE,
                 max_retries: int = 3, backoff_s: float = 1.0,
                 sleep: Callable[[float], None] = time.sleep):
        self.transport = transport
        self.voice_names = voice_names or {}
        self.sample_rate = sample_rate
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.sleep = sleep

    def synthesize(self, plan: SynthesisPlan, transcript: str | None = None) -> SpeechSample:
        request = TTSRequest(emit_ssml(plan), self.voice_names.get(plan.voice_id, plan.voice_id),
                             self.sample_rate)
        delay = self.backoff_s
        for attempt in range(self.max_retries + 1):
            try:
                response = self.transport(request)
                break
            except Exception:
                if attempt == self.max_retries:
                    raise
                self.sleep(delay)
                delay *= 2
        pcm = np.frombuffer(base64.b64decode(response.audio_content), dtype="<i2")
        wave = pcm.astype(np.float32) / 32767.0
        starts = [float(t) for t in response.timepoints_s]
        if len(starts) != len(plan.words):
            raise ContractViolation("TTS returned the wrong number of word timepoints")
        return SpeechSample(wave, self.sample_rate,
                            transcript if transcript is not None else " ".join(plan.words),
                            starts, len(wave) / self.sample_rate)
