"""How well do the two surrogates rank held-out configurations?

Fits the performance and diversity surrogates on growing prefixes of a
random sample and reports Kendall tau on a held-out set.
"""

# %%
from __future__ import annotations

from divbo import DivBOConfig, SyntheticProblem
from divbo.harness.experiments import surrogate_eval_experiment

# %%
out = surrogate_eval_experiment(SyntheticProblem(seed=1), 120, 30, (30, 60, 90), 0, DivBOConfig.desk())
for point in out["curve"]:
    print(f"k={point['k']:4d}  diversity tau={point['diversity_tau']:+.3f}  "
          f"performance tau={point['performance_tau']:+.3f}")
