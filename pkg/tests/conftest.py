import pytest

from sentstress.backbone import PretrainConfig, pretrain_toy_backbone
from sentstress.datagen import DatagenConfig, generate_dataset

TINY_PRETRAIN = dict(d_model=32, n_encoder_layers=2, n_decoder_layers=2, n_heads=4, ffn_dim=64,
                     batch_size=8, max_steps=40, eval_every=20, warmup_steps=10,
                     target_accuracy=1.1, min_accuracy=0.0, max_eval_samples=8)


@pytest.fixture(scope="session")
def tiny_data(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny")
    return generate_dataset(DatagenConfig(n_sentences=16, train_fraction=0.75, seed=1, out_dir=str(out)))


@pytest.fixture(scope="session")
def tiny_backbone(tiny_data):
    backbone, _ = pretrain_toy_backbone(tiny_data.train, PretrainConfig(**TINY_PRETRAIN), seed=0)
    return backbone


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
