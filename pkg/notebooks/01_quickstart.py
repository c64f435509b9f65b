"""Quick tour: one DivBO run on the synthetic problem, compared with BO-ES.

Run with ``python notebooks/01_quickstart.py``.  Uses the light ``desk``
surrogate profile so it finishes in about a minute on one core.
"""

# %%
from __future__ import annotations

import numpy as np

from divbo import DivBOConfig, SyntheticProblem, run, weight_schedule

# %% The diversity weight starts at zero and grows towards beta / 2.
for t in (0, 10, 50, 100, 250):
    print(f"w({t:3d}) = {weight_schedule(t, 0.05, 0.2):.6f}")

# %% Same budget, same seed, two methods.
cfg = DivBOConfig.desk(budget=60, seed=0)
results = {m: run(m, SyntheticProblem(seed=0), cfg) for m in ("BO-ES", "DivBO")}

for method, res in results.items():
    s = res.summary()
    print(f"{method:6s} val={s['val_error']:.4f} avg member={s['avg_member_error']:.4f} "
          f"pool={s['final_pool']}")

# %% Minimum diversity of each new candidate to the current pool, late iterations.
for method, res in results.items():
    late = [r["min_diversity"] for r in res.trace[40:] if r.get("min_diversity") is not None]
    print(f"{method:6s} median min-diversity over t>=40: {np.median(late):.4f}")
