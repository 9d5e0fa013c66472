# Which layers carry pitch, loudness and duration?  Random-forest probes on
# word-pooled hidden states, one per (layer, target).
#
#   python3 demos/04_probe_layers.py demo_run/backbone.ckpt demo_run/data/test.jsonl [out_dir]
import sys

from sentstress.backbone import Backbone
from sentstress.probe import probe_report

backbone = Backbone.load(sys.argv[1])
rows = probe_report(backbone, sys.argv[2], layers="all", targets=("f0", "rms", "duration"), seed=0,
                    out_dir=sys.argv[3] if len(sys.argv) > 3 else "probe_out")
for r in rows:
    print(f"layer {r.layer}  {r.target_name:8s}  MAE {r.mae_pct:5.2f}%  [{r.ci_low:5.2f}, {r.ci_high:5.2f}]")
# lower is better; the plots are written next to probe.csv
