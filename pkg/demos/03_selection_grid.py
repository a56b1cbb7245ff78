"""
Choosing the stage options
==========================

DetectorCV has four stage slots with a few options each: the CVM weight
(none or sigma 1, 1.5, 2), the transform (linear, log, histeq) and the
smoothing filter (three Gaussian sizes, three bilateral sigmas). That is
72 combinations. Each one is scored on image pairs by (uniformity,
repeatability) and the combinations are compared by Pareto dominance.

This runs the whole grid on one synthetic pair written to a temp dir.
"""

# %%
import json
import tempfile
from pathlib import Path

import numpy as np

from detectorcv.grid import GridSpec, dominance_report, load_manifest, run_selection_grid, write_grid_csv
from detectorcv.image_core import save_pfm
from detectorcv.synthetic import hdr_checkerboard

work = Path(tempfile.mkdtemp(prefix="detectorcv-grid-"))
scene = hdr_checkerboard(96, 96, square=12, ratio=300.0, seed=1)
rng = np.random.default_rng(2)
save_pfm(work / "dim.pfm", scene)
save_pfm(work / "bright.pfm", 20.0 * scene * rng.lognormal(0.0, 0.02, scene.shape))
manifest = {"images": [
    {"path": "dim.pfm", "type": "HDR", "dataset": "synthetic", "group": "board"},
    {"path": "bright.pfm", "type": "HDR", "dataset": "synthetic", "group": "board"},
]}
(work / "manifest.json").write_text(json.dumps(manifest, indent=2))

# %%
print(len(GridSpec()), "combinations")
rows = run_selection_grid(load_manifest(work / "manifest.json"))
write_grid_csv(work / "grid.csv", rows)
print(len(rows), "rows written to", work / "grid.csv")

best = sorted(rows, key=lambda v: (-(v.uniformity + v.rr), v.tag.combo_id))[:5]
for v in best:
    print(f"{v.tag.combo_id:<28} U={v.uniformity:.3f} RR={v.rr:.3f}")

# %%
# Dominance counts per transform+filter subgroup: how many vectors from
# other subgroups each subgroup's members beat in both metrics.
report = dominance_report(rows, "transform+filter")
for key, n in sorted(report["counts"].items(), key=lambda kv: -kv[1]):
    print(f"{key:<20}{n:>6}")
print("pareto front:", [p["combo_id"] for p in report["pareto_front"]["synthetic-HDR"]])
