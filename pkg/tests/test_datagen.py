import json
import math
from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sentstress.audio import read_wav
from sentstress.core import ContractViolation, read_manifest, split_into_sentences
from sentstress.datagen import (
    VOICE_IDS,
    VOICES,
    DatagenConfig,
    LabelResponse,
    ProviderError,
    RemoteLLMProvider,
    RuleBasedProvider,
    SkipSample,
    SynthesisPlan,
    build_synthesis_plan,
    emit_ssml,
    generate_dataset,
    parse_ssml,
    sample_rng,
    select_stress_words,
    synthesize_toy,
    toy_story_text,
)
from sentstress.datagen.synth import RAMP_S
from sentstress.probe import compute_f0, compute_rms

GOLDEN = Path(__file__).parent / "golden"


# -- stress selection ---------------------------------------------------------

def test_rule_provider_example():
    v0, v1 = select_stress_words("Tom ran home fast", RuleBasedProvider(), "s1")
    assert v0.stress == (0, 0, 1, 0)
    assert v1.stress == (0, 0, 0, 1)
    assert (v0.id, v1.id) == ("s1-v0", "s1-v1")


def test_all_stopwords_skipped():
    with pytest.raises(SkipSample) as info:
        select_stress_words("a a a", RuleBasedProvider(), "s2")
    assert info.value.reason == "no_stressable_word"


def test_variants_differ_on_toy_corpus():
    provider = RuleBasedProvider()
    for i, s in enumerate(split_into_sentences(toy_story_text(200, seed=3))):
        v0, v1 = select_stress_words(s, provider, f"s{i}")
        assert v0.stress != v1.stress
        assert sum(v0.stress) >= 1 and sum(v1.stress) >= 1


def test_remote_provider_retries_then_succeeds():
    calls, sleeps = [], []

    def flaky(request):
        calls.append(request)
        if len(calls) < 3:
            raise ConnectionError("boom")
        return LabelResponse(request.sentence_id, json.dumps({"options": [["cat"], ["ran"]]}))

    provider = RemoteLLMProvider(flaky, max_retries=3, backoff_s=0.5, sleep=sleeps.append)
    v0, v1 = provider.propose("s9", ["The", "cat", "ran"])
    assert (v0, v1) == ([0, 1, 0], [0, 0, 1])
    assert sleeps == [0.5, 1.0]
    assert "The cat ran" in calls[0].prompt


def test_remote_provider_error_carries_id():
    def down(request):
        raise TimeoutError("down")

    provider = RemoteLLMProvider(down, max_retries=1, sleep=lambda s: None)
    with pytest.raises(ProviderError) as info:
        provider.propose("s7", ["The", "cat", "ran"])
    assert info.value.sentence_id == "s7"
    assert info.value.retryable


# -- synthesis plans ----------------------------------------------------------

def test_plan_short_word():
    p = build_synthesis_plan(["as", "it", "is"], [1, 0, 0], "F1", 0)
    assert (p.rate_reduction_pct[0], p.gain_db[0], p.pitch_st[0]) == (85.0, 6.0, 1.5)
    assert (p.rate_reduction_pct[1], p.gain_db[1], p.pitch_st[1]) == (0.0, 0.0, 0.0)


def test_plan_long_word():
    p = build_synthesis_plan(["a", "magnificent", "cat"], [0, 1, 0], "F1", 0)
    assert p.rate_reduction_pct[1] == pytest.approx(85 - 55 * 0.9)
    assert p.gain_db[1] == pytest.approx(6 - 3 * 0.9)


def test_plan_contracts():
    with pytest.raises(ContractViolation):
        build_synthesis_plan(["a", "", "c"], [1, 0, 0], "F1", 0)
    with pytest.raises(ContractViolation):
        build_synthesis_plan(["a", "b", "c"], [0, 0, 0], "F1", 0)
    with pytest.raises(ContractViolation):
        build_synthesis_plan(["a", "b", "c"], [1, 0, 0], "X9", 0)


@given(st.integers(1, 20), st.integers(1, 20))
def test_monotone_in_length(l1, l2):
    if l1 > l2:
        l1, l2 = l2, l1
    p = build_synthesis_plan(["x" * l1, "y" * l2, "z"], [1, 1, 0], "M1", 0)
    assert p.rate_reduction_pct[0] >= p.rate_reduction_pct[1]
    assert p.gain_db[0] >= p.gain_db[1]


@given(st.lists(st.text(alphabet="abcdefghij", min_size=1, max_size=15), min_size=3, max_size=8),
       st.integers(0, 2**31 - 1), st.data())
def test_jittered_plan_in_range_and_deterministic(words, seed, data):
    stress = data.draw(st.lists(st.integers(0, 1), min_size=len(words), max_size=len(words)))
    stress[0] = 1
    voice = data.draw(st.sampled_from(VOICE_IDS))
    p = build_synthesis_plan(words, stress, voice, seed, noise_enabled=True)
    assert p == build_synthesis_plan(words, stress, voice, seed, noise_enabled=True)
    for s, r, g, pt in zip(p.stress, p.rate_reduction_pct, p.gain_db, p.pitch_st):
        if s:
            assert 30 <= r <= 85 and 3 <= g <= 6 and 1.0 <= pt <= 2.0
        else:
            assert r == g == pt == 0.0


def test_jitter_depends_on_position_not_neighbours():
    a = build_synthesis_plan(["big", "red", "ball"], [1, 0, 1], "F2", 11, noise_enabled=True)
    b = build_synthesis_plan(["big", "green", "ball"], [1, 1, 1], "F2", 11, noise_enabled=True)
    assert a.rate_reduction_pct[2] == b.rate_reduction_pct[2]


# -- SSML -----------------------------------------------------------------------

def test_ssml_spec_example_literal():
    plan = SynthesisPlan(("Tom", "ran"), (0, 1), (0.0, 85.0), (0.0, 6.0), (0.0, 1.5), "F1", 0)
    expected = '<speak>Tom <prosody rate="15.0%" volume="+6.0dB" pitch="+1.5st">ran</prosody></speak>'
    assert emit_ssml(plan) == expected
    assert (GOLDEN / "tom_ran.ssml").read_text() == expected


GOLDEN_PLANS = {
    "tom_ran.ssml": SynthesisPlan(("Tom", "ran"), (0, 1), (0.0, 85.0), (0.0, 6.0), (0.0, 1.5), "F1", 0),
    "magnificent.ssml": build_synthesis_plan(
        ["Lily", "found", "a", "magnificent", "kite", "&", "<ok>"], [0, 1, 0, 1, 0, 0, 1], "M3", 7),
    "jitter_seed12345.ssml": build_synthesis_plan(
        ["The", "happy", "bunny", "jumped", "again"], [0, 0, 1, 0, 1], "F4", 12345, noise_enabled=True),
}


@pytest.mark.parametrize("name", sorted(GOLDEN_PLANS))
def test_ssml_golden(name):
    plan = GOLDEN_PLANS[name]
    doc = emit_ssml(plan)
    assert doc.encode() == (GOLDEN / name).read_bytes()
    spans = parse_ssml(doc)
    stressed = [i for i, s in enumerate(plan.stress) if s]
    assert [s["word"] for s in spans] == [plan.words[i] for i in stressed]
    for span, i in zip(spans, stressed):
        assert span["rate_pct"] == round(100 - plan.rate_reduction_pct[i], 1)
        assert span["volume_db"] == round(plan.gain_db[i], 1)
        assert span["pitch_st"] == round(plan.pitch_st[i], 1)


def test_ssml_all_unstressed_is_plain():
    plan = SynthesisPlan(("a", "b", "c"), (0, 0, 0), (0.0,) * 3, (0.0,) * 3, (0.0,) * 3, "F1", 0)
    assert emit_ssml(plan) == "<speak>a b c</speak>"
    assert parse_ssml(emit_ssml(plan)) == []


# -- toy synthesizer ------------------------------------------------------------

def test_unstressed_duration():
    plan = SynthesisPlan(("cat", "dog", "sun"), (0, 0, 1), (0, 0, 50.0), (0, 0, 3.0), (0, 0, 1.5), "F1", 0)
    sample = synthesize_toy(plan)
    assert sample.word_duration_s[0] == pytest.approx(0.180)
    assert sample.word_duration_s[2] == pytest.approx(0.360)


def test_stressed_short_word_duration():
    plan = build_synthesis_plan(["as", "it", "is"], [1, 0, 0], "F1", 0)
    assert synthesize_toy(plan).word_duration_s[0] == pytest.approx(0.120 / 0.15)


def test_stressed_pitch_measured():
    plan = SynthesisPlan(("cat", "dog", "sun"), (1, 0, 0), (50.0, 0, 0), (3.0, 0, 0), (1.5, 0, 0), "F1", 0)
    s = synthesize_toy(plan)
    lo = int(s.word_start_s[0] * 16000)
    hi = lo + int(s.word_duration_s[0] * 16000)
    f0 = compute_f0(s.waveform[lo:hi], 16000)
    assert np.median(f0.values[f0.voiced]) == pytest.approx(180 * 2 ** (1.5 / 12), abs=0.5)


def test_sample_invariants_and_silence_outside_words():
    plan = build_synthesis_plan(["Ben", "painted", "a", "red", "boat"], [0, 1, 0, 0, 1], "M2", 5, True)
    s = synthesize_toy(plan)
    assert s.sample_rate_hz == 16000
    assert np.all(np.abs(s.waveform) <= 1.0)
    assert all(b > a for a, b in zip(s.word_start_s, s.word_start_s[1:]))
    assert s.word_start_s[-1] < s.duration_s
    inside = np.zeros(len(s.waveform), dtype=bool)
    for start, dur in zip(s.word_start_s, s.word_duration_s):
        lo = int(round(start * 16000))
        inside[lo: lo + int(round(dur * 16000))] = True
    assert np.all(s.waveform[~inside] == 0)
    # interior (past the ramps) carries energy
    ramp = int(RAMP_S * 16000)
    lo = int(round(s.word_start_s[1] * 16000)) + ramp
    assert np.abs(s.waveform[lo: lo + 400]).max() > 0.05


def _segment(sample, i):
    lo = int(round(sample.word_start_s[i] * 16000))
    return sample.waveform[lo: lo + int(round(sample.word_duration_s[i] * 16000))]


@pytest.mark.parametrize("voice", ["F1", "F5", "M1", "M5"])
def test_acoustic_realization(voice):
    words = ["the", "little", "kitten", "slept"]
    flat = SynthesisPlan(tuple(words), (0,) * 4, (0.0,) * 4, (0.0,) * 4, (0.0,) * 4, voice, 0)
    loud = build_synthesis_plan(words, [0, 0, 1, 0], voice, 0, noise_enabled=True)
    a, b = _segment(synthesize_toy(flat), 2), _segment(synthesize_toy(loud), 2)
    assert len(b) > len(a)
    rms_a = compute_rms(a, 16000).values.mean()
    rms_b = compute_rms(b, 16000).values.mean()
    assert 20 * math.log10(rms_b / rms_a) >= 2.0
    fa, fb = compute_f0(a, 16000), compute_f0(b, 16000)
    st_diff = 12 * math.log2(np.median(fb.values[fb.voiced]) / np.median(fa.values[fa.voiced]))
    assert abs(st_diff - loud.pitch_st[2]) < 0.05
    assert abs(st_diff - 1.5) <= 0.3 + abs(loud.pitch_st[2] - 1.5)


# -- dataset ----------------------------------------------------------------------

def test_voice_histogram_uniform():
    counts = Counter(VOICE_IDS[int(sample_rng(0, f"s{i:05d}-v{i % 2}").integers(10))] for i in range(2000))
    assert set(counts) == set(VOICES)
    for v in VOICES:
        assert 0.05 <= counts[v] / 2000 <= 0.15


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    cfg = DatagenConfig(n_sentences=100, train_fraction=0.9, seed=4, out_dir=str(out))
    return cfg, generate_dataset(cfg)


def test_split_sizes(small_dataset):
    cfg, paths = small_dataset
    train, test = read_manifest(paths.train), read_manifest(paths.test)
    assert (len(train), len(test)) == (180, 10)
    sids = Counter(r.id.rsplit("-", 1)[0] for r in train)
    assert set(sids.values()) == {2}
    assert not {r.id.rsplit("-", 1)[0] for r in test} & set(sids)
    report = json.loads(paths.report.read_text())
    assert report["produced"] == {"train": 180, "test": 10}


def test_wav_format_and_timestamps(small_dataset):
    _, paths = small_dataset
    rec = read_manifest(paths.test)[0]
    wave, sr = read_wav(paths.test.parent / rec.audio)
    assert sr == 16000 and wave.dtype == np.float32
    assert len(rec.word_start_s) == len(rec.words)
    assert rec.word_start_s[-1] < len(wave) / sr
    assert rec.voice in VOICES


def test_dataset_deterministic(small_dataset, tmp_path):
    cfg, paths = small_dataset
    again = generate_dataset(DatagenConfig(**{**cfg.__dict__, "out_dir": str(tmp_path)}))
    assert again.train.read_bytes() == paths.train.read_bytes()
    assert again.test.read_bytes() == paths.test.read_bytes()
    rec = read_manifest(paths.train)[7]
    assert (tmp_path / rec.audio).read_bytes() == (paths.train.parent / rec.audio).read_bytes()


def test_unwritable_out_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(RuntimeError):
        generate_dataset(DatagenConfig(n_sentences=3, out_dir=str(blocker / "sub")))


def test_provider_errors_counted(tmp_path):
    class Broken:
        def propose(self, sid, words):
            raise ProviderError(sid, "quota")

    paths = generate_dataset(DatagenConfig(n_sentences=5, out_dir=str(tmp_path)), provider=Broken())
    assert json.loads(paths.report.read_text())["skipped"] == {"provider_error": 5}
    assert read_manifest(paths.train) == []
