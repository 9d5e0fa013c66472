import json

import pytest
import torch

from conftest import TINY_PRETRAIN
from sentstress.cli import build_parser, main
from sentstress.core import read_manifest
from sentstress.stress_head import StressHead, TrainedHead, default_head_config


def test_parser_knows_every_subcommand():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    assert set(sub.choices) == {"datagen", "pretrain-backbone", "train-head", "transcribe", "layer-sweep",
                                "probe", "evaluate", "train-baseline"}
    args = parser.parse_args(["train-head", "--backbone", "b", "--data", "d", "--layer", "auto", "--out", "o"])
    assert args.layer == "auto" and args.epochs == 4
    args = parser.parse_args(["probe", "--backbone", "b", "--data", "d", "--layers", "0,2", "--out", "o"])
    assert args.layers == [0, 2]


def test_datagen_cli(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_sentences": 6, "train_fraction": 0.5}))
    assert main(["datagen", "--config", str(cfg), "--seed", "2", "--out", str(tmp_path / "d")]) == 0
    report = json.loads((tmp_path / "d" / "report.json").read_text())
    assert report["produced"] == {"train": 6, "test": 3}
    assert json.loads(capsys.readouterr().out)["train"].endswith("train.jsonl")


def test_pretrain_cli(tiny_data, tiny_backbone, tmp_path):
    cfg = tmp_path / "pt.json"
    cfg.write_text(json.dumps(TINY_PRETRAIN))
    out = tmp_path / "bb.ckpt"
    assert main(["pretrain-backbone", "--config", str(cfg), "--data", str(tiny_data.train),
                 "--seed", "0", "--out", str(out)]) == 0
    from sentstress.backbone import Backbone
    assert Backbone.load(out).digest() == tiny_backbone.digest()
    assert json.loads((tmp_path / "bb.ckpt.report.json").read_text())["steps"] == 40


def test_transcribe_probe_and_evaluate_cli(tiny_data, tiny_backbone, tmp_path, capsys):
    bb = tiny_backbone.save(tmp_path / "bb.ckpt")
    torch.manual_seed(0)
    head = TrainedHead(StressHead(default_head_config(tiny_backbone)), tiny_backbone.digest())
    hd = head.save(tmp_path / "head.ckpt")
    rec = read_manifest(tiny_data.test)[0]
    sidecar = tmp_path / "scores.json"
    assert main(["transcribe", "--backbone", str(bb), "--head", str(hd),
                 "--audio", str(tiny_data.test.parent / rec.audio), "--sidecar", str(sidecar)]) == 0
    scores = json.loads(sidecar.read_text())
    assert len(scores["token_scores"]) == len(scores["tokens"])

    assert main(["probe", "--backbone", str(bb), "--data", str(tiny_data.train), "--targets", "rms",
                 "--layers", "0,1", "--seed", "0", "--out", str(tmp_path / "probe")]) == 0
    lines = (tmp_path / "probe" / "probe.csv").read_text().splitlines()
    assert lines[0] == "layer,target,mae_pct,ci_low,ci_high" and len(lines) == 3
    assert (tmp_path / "probe" / "probe_rms.png").stat().st_size > 0

    capsys.readouterr()
    assert main(["train-baseline", "--align", "gt", "--data", str(tiny_data.train), "--seed", "0",
                 "--epochs", "2", "--out", str(tmp_path / "bl.ckpt")]) == 0
    assert main(["evaluate", "--system", "whistress", "--system", "baseline", "--backbone", str(bb),
                 "--head", str(hd), "--baseline", str(tmp_path / "bl.ckpt"), "--data", str(tiny_data.test),
                 "--out", str(tmp_path / "rep")]) == 0
    report = json.loads((tmp_path / "rep" / "report.json").read_text())
    assert [s["system"] for s in report["systems"]] == ["whistress", "baseline"]
    assert "BLSTM baseline" in (tmp_path / "rep" / "report.md").read_text()


def test_train_baseline_csv_without_file(tiny_data, tmp_path):
    from sentstress.backbone import ConfigurationError
    with pytest.raises(ConfigurationError):
        main(["train-baseline", "--align", "csv", "--data", str(tiny_data.train), "--out", str(tmp_path / "x")])
