"""Sweep the roof slope and write a per-angle error report.

Usage: ``python demos/angle_sweep.py [out_dir]`` (default ``out/angle_sweep``).
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

from roofnail.analysis import RunEntry, emit_report
from roofnail.experiment import deployment_table, sweep
from roofnail.scenario import Scenario

out = Path(sys.argv[1] if len(sys.argv) > 1 else "out/angle_sweep")

# Light gusts so repeated angles do not fly identical paths.
base = Scenario().replace(**{"wind.enabled": True, "wind.sigma": 0.5, "seed": 7})
runs = sweep(base, "roof.alpha_deg", [0.0, 15.0, 30.0, 0.0, 15.0, 30.0], jobs=2)

for row in deployment_table(runs, "alpha_deg"):
    print(row)

entries = [
    RunEntry(f"a{int(r.value)}_s{r.seed}", math.radians(r.value), r.result, r.scenario.layout()) for r in runs
]
report = emit_report(entries, out)
for angle, g in report["angles"].items():
    print(f"{angle:>3} deg: median e_v {g['e_v']['median']:+.3f} cm, range {g['e_v']['range']:.3f} cm")
print(f"report written to {out}")
