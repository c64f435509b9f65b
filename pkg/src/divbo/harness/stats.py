"""Rank correlation and paired significance tests used by the reports."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.stats import kendalltau, norm, rankdata

from ..errors import ValidationError

EXACT_MAX_N = 12
ALPHA = 0.05


def kendall_tau(a, b) -> float | None:
    """Tie-corrected Kendall tau-b, or ``None`` when either side is entirely tied."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("kendall_tau needs two 1-D sequences of equal length")
    if a.size < 2:
        raise ValidationError("kendall_tau needs at least 2 values")
    if np.any(np.isnan(a)) or np.any(np.isnan(b)):
        raise ValidationError("kendall_tau input contains NaN")
    if np.all(a == a[0]) or np.all(b == b[0]):
        return None
    tau = kendalltau(a, b, variant="b").statistic
    return float(np.clip(tau, -1.0, 1.0))


@dataclass(frozen=True)
class WilcoxonResult:
    """Outcome of a paired test of ``a`` against ``b`` (lower is better).

    ``verdict`` is ``"better"`` when ``a`` is significantly lower,
    ``"worse"`` when significantly higher, ``"same"`` otherwise, and
    ``"insufficient data"`` when fewer than 6 pairs differ.
    """

    statistic: float | None
    p_value: float | None
    verdict: str
    n: int

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value, "verdict": self.verdict, "n": self.n}


def _exact_p(ranks: np.ndarray, w_plus: float) -> float:
    total = ranks.sum()
    extreme = min(w_plus, total - w_plus)
    hits = 0
    for signs in product((0.0, 1.0), repeat=ranks.size):
        s = float(np.dot(signs, ranks))
        if s <= extreme + 1e-9 or s >= total - extreme - 1e-9:
            hits += 1
    return min(1.0, hits / 2.0 ** ranks.size)


def _normal_p(ranks: np.ndarray, w_plus: float) -> float:
    n = ranks.size
    mean = n * (n + 1) / 4.0
    _, counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(counts**3 - counts) / 48.0
    if var <= 0:
        return 1.0
    z = (w_plus - mean) / math.sqrt(var)
    return float(min(1.0, 2.0 * norm.sf(abs(z))))


def wilcoxon_signed_rank(a, b, exact: bool | None = None, alpha: float = ALPHA) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped and tied magnitudes get average ranks.
    The statistic is the positive-rank sum of ``a - b``.  By default the
    p-value is exact (full sign enumeration) for ``n <= 12`` and uses the
    tie-corrected normal approximation otherwise; ``exact`` forces either.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("paired samples must be 1-D and of equal length")
    d = a - b
    d = d[d != 0.0]
    n = int(d.size)
    if n < 6:
        return WilcoxonResult(None, None, "insufficient data", n)
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    use_exact = n <= EXACT_MAX_N if exact is None else exact
    p = _exact_p(ranks, w_plus) if use_exact else _normal_p(ranks, w_plus)
    if p <= alpha:
        verdict = "better" if d.mean() < 0 else "worse"
    else:
        verdict = "same"
    return WilcoxonResult(w_plus, p, verdict, n)
