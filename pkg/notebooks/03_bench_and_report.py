"""Small benchmark on a bundled scikit-learn dataset, written as report files.

Equivalent to::

    divbo bench --dataset bundled:breast_cancer --method RS,RS-ES,DivBO \
        --seed 0-2 --budget 30 --profile desk --out /tmp/divbo_bench
"""

# %%
from __future__ import annotations

import json
import tempfile
from pathlib import Path

from divbo import DivBOConfig
from divbo.harness.experiments import emit_report, run_experiment

# %%
out = Path(tempfile.mkdtemp(prefix="divbo_bench_"))
cfg = DivBOConfig.desk(budget=30)
report = run_experiment(["bundled:breast_cancer"], ["RS", "RS-ES", "DivBO"], [0, 1, 2], cfg,
                        out=out, baseline="RS")
for path in emit_report(report, out):
    print("wrote", path)

# %%
cells = report["aggregates"]["datasets"]
for name, block in cells.items():
    for method, cell in block["methods"].items():
        print(name, method, json.dumps(cell["val_error"]))
