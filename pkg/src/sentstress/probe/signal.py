"""Framewise pitch and energy, and window pooling for probing targets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, sosfiltfilt

FRAME_S = 0.075
HOP_S = 0.020
POOL_S = 0.300
F0_MIN, F0_MAX = 60.0, 400.0
VOICING_THRESHOLD = 0.3
PITCH_LOWPASS_HZ = 1000.0
_SILENCE_POWER = 1e-10


@dataclass
class FrameSeries:
    values: np.ndarray
    voiced: np.ndarray
    kind: str = "f0"
    frame_length_s: float = FRAME_S
    hop_s: float = HOP_S

    def __len__(self):
        return len(self.values)

    @property
    def starts(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.hop_s

    @property
    def centers(self) -> np.ndarray:
        return self.starts + self.frame_length_s / 2


def frame_signal(waveform: np.ndarray, sample_rate: int, frame_s: float = FRAME_S,
                 hop_s: float = HOP_S) -> np.ndarray:
    x = np.asarray(waveform, dtype=np.float64)
    frame = int(round(frame_s * sample_rate))
    hop = int(round(hop_s * sample_rate))
    if len(x) < frame:
        return np.zeros((0, frame))
    n = (len(x) - frame) // hop + 1
    return np.lib.stride_tricks.sliding_window_view(x, frame)[::hop][:n]


def _normalized_autocorr(frames: np.ndarray, max_lag: int) -> np.ndarray:
    """r[f, tau] = <x[:-tau], x[tau:]> / (|x[:-tau]| |x[tau:]|) for tau in 0..max_lag."""
    n = frames.shape[1]
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    spec = np.fft.rfft(frames, nfft, axis=1)
    ac = np.fft.irfft(spec * np.conj(spec), nfft, axis=1)[:, : max_lag + 1]
    sq = np.cumsum(frames**2, axis=1)
    total = sq[:, -1:]
    lags = np.arange(max_lag + 1)
    head = sq[:, n - 1 - lags]                               # energy of x[0 : n-tau]
    tail = total - np.concatenate([np.zeros((len(frames), 1)), sq[:, : max_lag]], axis=1)
    denom = np.sqrt(np.maximum(head * tail, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(denom > _SILENCE_POWER, ac / denom, 0.0)
    return r


def _pick_period(r: np.ndarray, lo: int, hi: int) -> float | None:
    inner = np.arange(max(lo, 1), hi + 1)
    peaks = inner[(r[inner] >= r[inner - 1]) & (r[inner] > r[inner + 1])]
    if len(peaks) == 0:
        return None
    lag = int(peaks[np.argmax(r[peaks])])
    best = r[lag]
    if best < VOICING_THRESHOLD:
        return None
    # prefer the shortest sub-multiple of the best lag that correlates almost as well
    for m in range(int(lag // lo), 1, -1):
        a = max(int(np.floor(lag / m * 0.96)), lo)
        b = min(int(np.ceil(lag / m * 1.04)), hi)
        if b < a:
            continue
        cand = a + int(np.argmax(r[a:b + 1]))
        if r[cand] >= 0.9 * best and lo < cand < hi:
            lag = cand
            break
    y0, y1, y2 = r[lag - 1], r[lag], r[lag + 1]
    denom = y0 - 2 * y1 + y2
    shift = 0.5 * (y0 - y2) / denom if denom < 0 else 0.0
    return lag + float(np.clip(shift, -0.5, 0.5))


def compute_f0(waveform: np.ndarray, sample_rate: int) -> FrameSeries:
    """Autocorrelation pitch in 60-400 Hz, 75 ms frames every 20 ms.

    The signal is low-passed at 1 kHz first.  Frames whose best normalized
    correlation is under 0.3 are unvoiced and report 0 Hz.  The strongest
    peak is replaced by its shortest sub-multiple that still reaches 90% of
    its correlation, which rules out octave-down errors.
    """
    x = np.asarray(waveform, dtype=np.float64)
    frame_len = int(round(FRAME_S * sample_rate))
    if len(x) >= frame_len:
        sos = butter(6, PITCH_LOWPASS_HZ, btype="low", fs=sample_rate, output="sos")
        x = sosfiltfilt(sos, x)
    frames = frame_signal(x, sample_rate)
    n_frames = len(frames)
    values = np.zeros(n_frames)
    voiced = np.zeros(n_frames, dtype=bool)
    if n_frames == 0:
        return FrameSeries(values, voiced, "f0")
    lo = int(np.floor(sample_rate / F0_MAX))
    hi = int(np.ceil(sample_rate / F0_MIN))
    r = _normalized_autocorr(frames, hi + 1)
    power = np.mean(frames**2, axis=1)
    for f in range(n_frames):
        if power[f] <= _SILENCE_POWER:
            continue
        period = _pick_period(r[f], lo, hi)
        if period is None:
            continue
        f0 = sample_rate / period
        if F0_MIN <= f0 <= F0_MAX:
            values[f] = f0
            voiced[f] = True
    return FrameSeries(values, voiced, "f0")


def compute_rms(waveform: np.ndarray, sample_rate: int) -> FrameSeries:
    frames = frame_signal(waveform, sample_rate)
    values = np.sqrt(np.mean(frames**2, axis=1)) if len(frames) else np.zeros(0)
    return FrameSeries(values, np.ones(len(values), dtype=bool), "rms")


@dataclass
class PooledTargets:
    values: np.ndarray
    starts: np.ndarray
    ends: np.ndarray


def pool_targets(series: FrameSeries, window_s: float = POOL_S) -> PooledTargets:
    """Non-overlapping windows of whole frames; trailing partial window dropped.

    F0 windows take the max over voiced frames (windows with none are
    dropped), RMS windows take the mean.
    """
    per = int(round(window_s / series.hop_s))
    n_win = len(series) // per
    values, starts, ends = [], [], []
    for w in range(n_win):
        sl = slice(w * per, (w + 1) * per)
        if series.kind == "f0":
            voiced = series.voiced[sl]
            if not voiced.any():
                continue
            values.append(series.values[sl][voiced].max())
        else:
            values.append(series.values[sl].mean())
        starts.append(w * window_s)
        ends.append((w + 1) * window_s)
    return PooledTargets(np.asarray(values, dtype=float), np.asarray(starts), np.asarray(ends))


def pool_embeddings(states: np.ndarray, frames_per_second: float,
                    targets: PooledTargets) -> tuple[np.ndarray, np.ndarray]:
    """Mean state per target window (by frame centre); empty windows are
    dropped together with their targets.  Returns ``(embeddings, targets)``."""
    states = np.asarray(states)
    centers = (np.arange(len(states)) + 0.5) / frames_per_second
    xs, ys = [], []
    for value, a, b in zip(targets.values, targets.starts, targets.ends):
        mask = (centers >= a) & (centers < b)
        if mask.any():
            xs.append(states[mask].mean(axis=0))
            ys.append(value)
    d = states.shape[1] if states.ndim == 2 else 0
    return (np.asarray(xs).reshape(len(xs), d), np.asarray(ys, dtype=float))
