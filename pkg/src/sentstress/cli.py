"""Command line entry point: ``sentstress <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path


def _layer(value: str):
    return value if value == "auto" else int(value)


def _layers(value: str):
    return "all" if value == "all" else [int(v) for v in value.split(",") if v]


def cmd_datagen(args) -> int:
    from .datagen import DatagenConfig, generate_dataset

    overrides = {"seed": args.seed, "out_dir": args.out, "n_sentences": args.n_sentences}
    if args.config:
        cfg = DatagenConfig.from_file(args.config, **overrides)
    else:
        cfg = DatagenConfig(**{k: v for k, v in overrides.items() if v is not None})
    paths = generate_dataset(cfg)
    print(json.dumps({k: str(v) for k, v in asdict(paths).items()}))
    return 0


def cmd_pretrain(args) -> int:
    from .backbone import PretrainConfig, pretrain_toy_backbone

    cfg = PretrainConfig.from_file(args.config) if args.config else PretrainConfig()
    backbone, report = pretrain_toy_backbone(args.data, cfg, seed=args.seed)
    backbone.save(args.out, meta={"heldout_word_accuracy": report.heldout_word_accuracy,
                                  "steps": report.steps, "seed": args.seed})
    Path(str(args.out) + ".report.json").write_text(json.dumps(asdict(report), indent=2) + "\n")
    print(f"held-out word accuracy {report.heldout_word_accuracy:.3f} after {report.steps} steps")
    return 0


def cmd_train_head(args) -> int:
    from .backbone import Backbone
    from .stress_head import default_head_config, train_head

    backbone = Backbone.load(args.backbone)
    cfg = default_head_config(backbone, args.layer)
    head, report = train_head(backbone, args.data, cfg, epochs=args.epochs, seed=args.seed)
    head.save(args.out, meta={"seed": args.seed, "epochs": args.epochs})
    Path(str(args.out) + ".report.json").write_text(json.dumps(asdict(report), indent=2) + "\n")
    print(f"layer {cfg.input_layer_dec}: {report.n_used} samples used, {report.n_rejected} rejected, "
          f"losses {[round(x, 4) for x in report.epoch_losses]}")
    return 0


def cmd_transcribe(args) -> int:
    from .audio import read_wav
    from .backbone import Backbone
    from .stress_head import TrainedHead, predict

    backbone = Backbone.load(args.backbone)
    head = TrainedHead.load(args.head)
    wave, _ = read_wav(args.audio)
    out = predict(backbone, head, wave)
    print(out.render())
    sidecar = Path(args.sidecar) if args.sidecar else Path(args.audio).with_suffix(".scores.json")
    sidecar.write_text(json.dumps({"text": out.text, "tokens": out.tokens, "token_scores": out.token_scores,
                                   "word_index": out.word_index, "words": out.words,
                                   "word_stress": out.word_stress, "truncated": out.truncated},
                                  indent=2) + "\n")
    return 0


def cmd_layer_sweep(args) -> int:
    from .backbone import Backbone
    from .stress_head import layer_sweep, sweep_csv, sweep_markdown

    backbone = Backbone.load(args.backbone)
    layers = args.layers
    if layers == "all":
        layers = range(min(backbone.n_encoder_layers, backbone.n_decoder_layers) + 1)
    rows = layer_sweep(backbone, args.train, args.test, layers, seed=args.seed, epochs=args.epochs)
    table = sweep_markdown(rows)
    print(table, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.md").write_text(table)
        (out / "sweep.csv").write_text(sweep_csv(rows))
    return 0


def cmd_probe(args) -> int:
    from .backbone import Backbone
    from .probe import probe_csv, probe_report

    backbone = Backbone.load(args.backbone)
    targets = [t for t in args.targets.split(",") if t]
    rows = probe_report(backbone, args.data, args.layers, targets, seed=args.seed, out_dir=args.out)
    print(probe_csv(rows), end="")
    return 0


def cmd_evaluate(args) -> int:
    from .backbone import Backbone
    from .evaluation import BaselineModel, evaluate, markdown_table, read_alignment_csv, write_report
    from .stress_head import TrainedHead

    backbone = Backbone.load(args.backbone) if args.backbone else None
    head = TrainedHead.load(args.head) if args.head else None
    baseline = BaselineModel.load(args.baseline) if args.baseline else None
    external = read_alignment_csv(args.alignment_file) if args.alignment_file else None
    reports = [evaluate(system, args.data, backbone=backbone, head=head, baseline=baseline,
                        alignment=args.align, external=external)
               for system in args.system]
    write_report(reports, args.out)
    print(markdown_table(reports), end="")
    return 0


def cmd_train_baseline(args) -> int:
    from .evaluation import read_alignment_csv, train_baseline

    external = read_alignment_csv(args.alignment_file) if args.alignment_file else None
    model, report = train_baseline(args.data, args.align, seed=args.seed, epochs=args.epochs,
                                   external=external)
    model.save(args.out)
    Path(str(args.out) + ".report.json").write_text(json.dumps(asdict(report), indent=2) + "\n")
    print(f"{report.n_samples} samples, {report.n_skipped} skipped, final loss {report.epoch_losses[-1]:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sentstress", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="synthesize a stress-labelled toy corpus")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--n-sentences", type=int)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("pretrain-backbone", help="train the toy ASR backbone")
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train-head", help="train a stress head on a frozen backbone")
    p.add_argument("--backbone", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--layer", type=_layer, default="auto")
    p.add_argument("--epochs", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_head)

    p = sub.add_parser("transcribe", help="transcribe a WAV and mark stressed words")
    p.add_argument("--backbone", required=True)
    p.add_argument("--head", required=True)
    p.add_argument("--audio", required=True)
    p.add_argument("--sidecar", help="token-score JSON path (default: next to the audio)")
    p.set_defaults(func=cmd_transcribe)

    p = sub.add_parser("layer-sweep", help="one head per input layer, tabulated")
    p.add_argument("--backbone", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--layers", type=_layers, default="all")
    p.add_argument("--epochs", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_layer_sweep)

    p = sub.add_parser("probe", help="random-forest probes of F0, RMS and duration per layer")
    p.add_argument("--backbone", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--targets", default="f0,rms,duration")
    p.add_argument("--layers", type=_layers, default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("evaluate", help="word-level precision/recall/F1 on a test manifest")
    p.add_argument("--system", action="append", choices=["whistress", "baseline"], required=True)
    p.add_argument("--backbone")
    p.add_argument("--head")
    p.add_argument("--baseline")
    p.add_argument("--align", choices=["gt", "csv"], default="gt")
    p.add_argument("--alignment-file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("train-baseline", help="train the BLSTM baseline on aligned features")
    p.add_argument("--align", choices=["gt", "csv"], default="gt")
    p.add_argument("--alignment-file")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_baseline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
