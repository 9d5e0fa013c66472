# Small end-to-end run: synthesize a corpus, pretrain the toy ASR backbone,
# freeze it, train the stress head, and compare against the BLSTM baseline.
#
#   python3 demos/03_toy_pipeline.py [n_sentences] [out_dir]
#
# 300 sentences take a few minutes on one core; the acceptance run uses 1200.
import sys
import time
from pathlib import Path

from sentstress.backbone import PretrainConfig, pretrain_toy_backbone
from sentstress.datagen import DatagenConfig, generate_dataset
from sentstress.evaluation import evaluate, markdown_table, train_baseline
from sentstress.stress_head import default_head_config, train_head

n = int(sys.argv[1]) if len(sys.argv) > 1 else 300
out = Path(sys.argv[2] if len(sys.argv) > 2 else "demo_run")

t0 = time.time()
paths = generate_dataset(DatagenConfig(n_sentences=n, train_fraction=5 / 6, seed=0, out_dir=str(out / "data")))
print(f"data ready in {time.time() - t0:.0f}s: {paths.train}, {paths.test}")

backbone, report = pretrain_toy_backbone(paths.train, PretrainConfig(), seed=0)
print(f"backbone: {report.steps} steps, held-out word accuracy {report.heldout_word_accuracy:.3f}")
backbone.save(out / "backbone.ckpt")

# layer "auto" picks the decoder layer about three quarters of the way up
head, head_report = train_head(backbone, paths.train, default_head_config(backbone, "auto"), epochs=4, seed=0)
print(f"head: {head_report.n_used} samples used, {head_report.n_rejected} rejected, "
      f"losses {[round(x, 3) for x in head_report.epoch_losses]}")
assert head_report.backbone_digest_before == head_report.backbone_digest_after
head.save(out / "head.ckpt")

baseline, _ = train_baseline(paths.train, "gt", seed=0)
reports = [evaluate("whistress", paths.test, backbone=backbone, head=head),
           evaluate("baseline", paths.test, baseline=baseline)]
print()
print(markdown_table(reports))
print(f"total {time.time() - t0:.0f}s")
