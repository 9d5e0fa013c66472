# How a stress pattern becomes audio: plan -> SSML -> toy waveform -> measured prosody.
import numpy as np

from sentstress.datagen import build_synthesis_plan, emit_ssml, synthesize_toy
from sentstress.probe import compute_f0, compute_rms

words = ["the", "little", "frog", "jumped"]

# Same sentence, same voice, stress on "frog" or on "jumped".
for stress in ([0, 0, 1, 0], [0, 0, 0, 1]):
    plan = build_synthesis_plan(words, stress, voice_id="F1", seed=7)
    print(emit_ssml(plan))
    sample = synthesize_toy(plan)
    print(f"  {len(sample.waveform) / 16000:.2f} s of audio")
    for w, t0, dur in zip(words, sample.word_start_s, sample.word_duration_s):
        seg = sample.waveform[int(t0 * 16000): int((t0 + dur) * 16000)]
        f0 = compute_f0(seg, 16000)
        rms = compute_rms(seg, 16000).values.mean()
        pitch = np.median(f0.values[f0.voiced]) if f0.voiced.any() else float("nan")
        print(f"  {w:8s} dur {dur * 1000:5.0f} ms  f0 {pitch:6.1f} Hz  rms {20 * np.log10(rms):6.1f} dBFS")
    print()

# With noise on, each stressed word gets jittered rate/gain/pitch.
noisy = build_synthesis_plan(words, [0, 0, 1, 0], voice_id="M1", seed=7, noise_enabled=True)
print("jittered:", emit_ssml(noisy))
