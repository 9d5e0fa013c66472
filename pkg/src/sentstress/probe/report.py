"""Layer-by-layer probe tables and plots for a frozen backbone."""

from __future__ import annotations

import csv
import io
import zlib
from pathlib import Path
from typing import Sequence

import numpy as np

from ..audio import read_wav
from ..backbone.asr import Backbone, encoder_states, transcribe_batch
from ..backbone.frontend import log_mel
from ..core import ManifestRecord, n_words_in, read_manifest
from .regression import LayerProbeResult, probe_layer
from .signal import compute_f0, compute_rms, pool_embeddings, pool_targets

ENCODER_TARGETS = ("f0", "rms")
DECODER_TARGETS = ("duration",)


def word_duration_targets(record: ManifestRecord, decoder_states: np.ndarray,
                          word_index: Sequence[int], duration_s: float):
    """Mean decoder state per word and the word's duration from start times.

    Returns ``None`` when the transcription's word count does not match.
    """
    starts = list(record.word_start_s)
    if n_words_in(word_index) != len(starts) or not starts:
        return None
    ends = starts[1:] + [duration_s]
    durations = np.asarray(ends) - np.asarray(starts)
    index = np.asarray(word_index)
    states = np.asarray(decoder_states)
    emb = np.stack([states[index == w].mean(axis=0) for w in range(len(starts))])
    return emb, durations


def _derived_seed(seed: int, layer: int, target: str) -> int:
    return int(np.random.default_rng([seed, layer, zlib.crc32(target.encode())]).integers(2**31 - 1))


def collect_probe_data(backbone: Backbone, manifest_path: str | Path, targets: Sequence[str],
                       batch_size: int = 32):
    """Embeddings/targets per (target, layer) plus a count of skipped samples."""
    manifest_path = Path(manifest_path)
    records = read_manifest(manifest_path)
    fps = backbone.cfg.frames_per_second
    data: dict[tuple[str, int], tuple[list, list]] = {}
    skipped = 0
    for s in range(0, len(records), batch_size):
        chunk = records[s: s + batch_size]
        waves = [read_wav(manifest_path.parent / r.audio)[0] for r in chunk]
        if any(t in ENCODER_TARGETS for t in targets):
            enc = encoder_states(backbone, waves)
            for wave, layers in zip(waves, enc):
                for name in (t for t in targets if t in ENCODER_TARGETS):
                    series = compute_f0(wave, 16000) if name == "f0" else compute_rms(wave, 16000)
                    pooled = pool_targets(series)
                    for k, states in enumerate(layers):
                        X, y = pool_embeddings(states, fps, pooled)
                        xs, ys = data.setdefault((name, k), ([], []))
                        xs.append(X)
                        ys.append(y)
        if "duration" in targets:
            states = transcribe_batch(backbone, mels=[log_mel(w) for w in waves], encoder_layers=[])
            for rec, wave, st in zip(chunk, waves, states):
                for k, dec in enumerate(st.decoder_states):
                    out = word_duration_targets(rec, dec, st.word_index, len(wave) / 16000)
                    if out is None:
                        if k == 0:
                            skipped += 1
                        break
                    xs, ys = data.setdefault(("duration", k), ([], []))
                    xs.append(out[0])
                    ys.append(out[1])
    merged = {key: (np.concatenate(xs), np.concatenate(ys)) for key, (xs, ys) in data.items()}
    return merged, skipped


def probe_report(backbone: Backbone, manifest_path: str | Path, layers: Sequence[int] | str = "all",
                 targets: Sequence[str] = ("f0", "rms", "duration"), seed: int = 0,
                 out_dir: str | Path | None = None, n_bootstrap: int = 100) -> list[LayerProbeResult]:
    """Probe every requested (layer, target) pair.

    F0 and RMS are probed from encoder layers, duration from decoder
    layers.  With ``out_dir`` a ``probe.csv`` and one PNG per target are
    written.
    """
    data, _ = collect_probe_data(backbone, manifest_path, targets)
    rows = []
    for target in targets:
        depth = backbone.n_encoder_layers if target in ENCODER_TARGETS else backbone.n_decoder_layers
        wanted = range(depth + 1) if layers == "all" else [k for k in layers if 0 <= k <= depth]
        for k in wanted:
            X, y = data[(target, k)]
            rows.append(probe_layer(X, y, _derived_seed(seed, k, target), layer=k,
                                    target_name=target, n_bootstrap=n_bootstrap))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "probe.csv").write_text(probe_csv(rows))
        plot_probe(rows, out)
    return rows


def probe_csv(rows: Sequence[LayerProbeResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["layer", "target", "mae_pct", "ci_low", "ci_high"])
    for r in rows:
        writer.writerow([r.layer, r.target_name, f"{r.mae_pct:.6f}", f"{r.ci_low:.6f}", f"{r.ci_high:.6f}"])
    return buf.getvalue()


def plot_probe(rows: Sequence[LayerProbeResult], out_dir: Path) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    for target in sorted({r.target_name for r in rows}):
        sel = sorted((r for r in rows if r.target_name == target), key=lambda r: r.layer)
        x = [r.layer for r in sel]
        fig, ax = plt.subplots(figsize=(4, 3))
        ax.plot(x, [r.mae_pct for r in sel], marker="o", label=target)
        ax.fill_between(x, [r.ci_low for r in sel], [r.ci_high for r in sel], alpha=0.3)
        stack = "encoder" if target in ENCODER_TARGETS else "decoder"
        ax.set_xlabel(f"{stack} layer")
        ax.set_ylabel("MAE %")
        ax.set_title(target)
        fig.tight_layout()
        path = out_dir / f"probe_{target}.png"
        fig.savefig(path, dpi=100)
        plt.close(fig)
        paths.append(path)
    return paths
