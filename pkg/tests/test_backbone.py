import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TINY_PRETRAIN
from sentstress.audio import read_wav
from sentstress.backbone import (
    Backbone,
    BackboneConfig,
    ConfigurationError,
    PretrainConfig,
    ToyASR,
    log_mel,
    pretrain_toy_backbone,
    select_head_input_layer,
    transcribe_with_states,
    word_accuracy,
)
from sentstress.backbone.frontend import mel_filterbank
from sentstress.backbone.train import word_error_count
from sentstress.checkpoint import CheckpointError
from sentstress.core import read_manifest


@pytest.mark.parametrize("n, expected", [(12, 9), (4, 3), (1, 1), (2, 2), (6, 5)])
def test_default_head_layer(n, expected):
    assert select_head_input_layer(n) == expected


def test_head_layer_override_and_range():
    assert select_head_input_layer(12, 12) == 12
    for bad in (0, 13, -1):
        with pytest.raises(ConfigurationError):
            select_head_input_layer(12, bad)


def test_config_heads_divide():
    with pytest.raises(ValueError):
        BackboneConfig(d_model=30, n_heads=4)


def test_frontend_shapes():
    fb = mel_filterbank()
    assert fb.shape == (80, 201)
    assert np.all(fb >= 0)
    mel = log_mel(np.zeros(16000, dtype=np.float32))
    assert mel.shape == (16000 // 160 + 1, 80)
    assert np.isfinite(mel).all()


def test_word_error_rate():
    assert word_error_count("a b c".split(), "a x c".split()) == 1
    assert word_error_count("a b c".split(), "a c".split()) == 1
    assert word_accuracy(["Tom ran home."], ["Tom ran home."]) == 1.0
    assert word_accuracy(["Tom ran home fast."], ["Tom ran home."]) == pytest.approx(0.75)


def _random_backbone(seed=0, **kw):
    torch.manual_seed(seed)
    cfg = BackboneConfig(d_model=16, n_encoder_layers=2, n_decoder_layers=3, n_heads=2, ffn_dim=32,
                         max_tokens=12, vocab=("<pad>", "<sot>", "<eot>", "<unk>", "Tom", " ran", "."), **kw)
    return Backbone(ToyASR(cfg))


@settings(max_examples=10, deadline=None)
@given(st.integers(1600, 32000), st.integers(0, 2**16))
def test_state_shapes(n_samples, seed):
    bb = _random_backbone()
    wave = np.random.default_rng(seed).standard_normal(n_samples).astype(np.float32) * 0.1
    out = transcribe_with_states(bb, wave)
    assert len(out.encoder_states) == 3 and len(out.decoder_states) == 4
    frames = {s.shape for s in out.encoder_states}
    assert len(frames) == 1 and frames.pop()[1] == 16
    for s in out.decoder_states:
        assert s.shape == (len(out.tokens), 16)
    assert len(out.token_strings) == len(out.tokens)
    if out.truncated:
        assert len(out.tokens) == bb.cfg.max_tokens - 1
    assert not {"<sot>", "<pad>"} & set(out.token_strings)


def test_deterministic_inference():
    bb = _random_backbone()
    wave = np.random.default_rng(3).standard_normal(8000).astype(np.float32)
    a, b = transcribe_with_states(bb, wave), transcribe_with_states(bb, wave)
    assert a.tokens == b.tokens
    for x, y in zip(a.encoder_states + a.decoder_states, b.encoder_states + b.decoder_states):
        assert np.array_equal(x, y)


def test_checkpoint_roundtrip_and_tamper(tmp_path):
    bb = _random_backbone()
    path = bb.save(tmp_path / "bb.ckpt")
    again = Backbone.load(path)
    assert again.digest() == bb.digest()
    assert again.frozen
    raw = bytearray(path.read_bytes())
    raw[-3] ^= 0xFF
    (tmp_path / "bad.ckpt").write_bytes(bytes(raw))
    with pytest.raises(CheckpointError):
        Backbone.load(tmp_path / "bad.ckpt")
    (tmp_path / "junk.ckpt").write_bytes(b"hello")
    with pytest.raises(CheckpointError):
        Backbone.load(tmp_path / "junk.ckpt")


def test_empty_manifest_is_fatal(tmp_path):
    (tmp_path / "empty.jsonl").write_text("")
    with pytest.raises(ConfigurationError):
        pretrain_toy_backbone(tmp_path / "empty.jsonl", PretrainConfig(**TINY_PRETRAIN))


def test_pretraining_deterministic(tiny_data, tiny_backbone, tmp_path):
    again, report = pretrain_toy_backbone(tiny_data.train, PretrainConfig(**TINY_PRETRAIN), seed=0)
    assert again.digest() == tiny_backbone.digest()
    a = tiny_backbone.save(tmp_path / "a.ckpt")
    b = again.save(tmp_path / "b.ckpt")
    assert a.read_bytes() == b.read_bytes()
    assert report.steps == 40 and again.frozen


def test_silence_decodes_without_crash(tiny_backbone):
    out = transcribe_with_states(tiny_backbone, np.zeros(16000, dtype=np.float32))
    assert len(out.encoder_states) == tiny_backbone.n_encoder_layers + 1
    assert len(out.decoder_states) == tiny_backbone.n_decoder_layers + 1


def test_transcribe_real_sample(tiny_data, tiny_backbone):
    rec = read_manifest(tiny_data.test)[0]
    wave, _ = read_wav(tiny_data.test.parent / rec.audio)
    out = transcribe_with_states(tiny_backbone, wave)
    assert len(out.word_index) == len(out.tokens)
