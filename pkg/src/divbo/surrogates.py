"""Performance and pairwise-diversity surrogates and their acquisition functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import ValidationError
from .history import RunHistory
from .treereg import (
    BoostedTreeEnsembleBag,
    BoostingParams,
    ForestParams,
    ProbabilisticForest,
    fit_boosted_bag,
    fit_forest,
)

SIGMA_FLOOR = 1e-12
VAR_FLOOR = 1e-12


@dataclass
class PerfSurrogate:
    model: ProbabilisticForest
    y_best: float

    def predict(self, X):
        return self.model.predict(X)


@dataclass
class DivSurrogate:
    """Boosted-bag regressor over concatenated pair encodings ``[enc(a) | enc(b)]``."""

    model: BoostedTreeEnsembleBag
    width: int

    def predict_pairs(self, A, B):
        """Mean and variance for pairs ``(A[k], B[k])``."""
        A = np.atleast_2d(A)
        B = np.atleast_2d(B)
        return self.model.predict_mean_var(np.hstack([A, B]))

    def predict_cross(self, A, B):
        """Mean and variance for every pair ``(A[a], B[b])``, row ``a * len(B) + b``."""
        return self.model.predict_cross(A, B)


def fit_perf(history: RunHistory, params: ForestParams = ForestParams(), seed=0) -> PerfSurrogate:
    """Forest on (encoding, validation error); crashed runs carry the penalty error."""
    if len(history) == 0:
        raise ValidationError("cannot fit a performance surrogate on an empty history")
    y = history.errors
    model = fit_forest(history.encodings, y, params, seed)
    return PerfSurrogate(model, float(np.min(y)))


def ei_from_moments(mu, var, y_best) -> np.ndarray:
    """Expected improvement below ``y_best`` for Gaussian predictions (minimisation)."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.sqrt(np.maximum(np.asarray(var, dtype=np.float64), 0.0))
    improvement = y_best - mu
    out = np.maximum(improvement, 0.0)
    ok = sigma >= SIGMA_FLOOR
    if np.any(ok):
        z = improvement[ok] / sigma[ok]
        out[ok] = improvement[ok] * norm.cdf(z) + sigma[ok] * norm.pdf(z)
    return np.maximum(out, 0.0)


def expected_improvement(surrogate: PerfSurrogate, X):
    """EI at encoded configuration(s) ``X``; scalar for a single vector."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    mu, var = surrogate.model.predict(np.atleast_2d(X))
    ei = ei_from_moments(mu, var, surrogate.y_best)
    return float(ei[0]) if single else ei


def build_pair_training_set(history: RunHistory):
    """All ordered pairs (self-pairs included) with ground-truth diversity targets.

    Row ``i * n + j`` holds ``[enc(x_i) | enc(x_j)]``; the diversity matrix is
    symmetric, so ``(i, j)`` and ``(j, i)`` carry the identical target.
    """
    n = len(history)
    if n == 0:
        raise ValidationError("empty history")
    X = history.encodings
    d = X.shape[1]
    pairs = np.empty((n * n, 2 * d))
    pairs[:, :d] = np.repeat(X, n, axis=0)
    pairs[:, d:] = np.tile(X, (n, 1))
    return pairs, history.diversity_matrix().reshape(-1).copy()


def fit_div(history: RunHistory, params: BoostingParams = BoostingParams(), seed=0) -> DivSurrogate:
    if len(history) < 2:
        raise ValidationError("the diversity surrogate needs at least 2 observations")
    X, y = build_pair_training_set(history)
    return DivSurrogate(fit_boosted_bag(X, y, params, seed), history.encodings.shape[1])


def _unique_rows(A):
    _, first = np.unique(A, axis=0, return_index=True)
    return A[np.sort(first)]


def diversity_acquisition(
    surrogate: DivSurrogate,
    pool_encodings,
    candidates,
    n_samples: int = 10,
    seed=0,
):
    """Monte-Carlo mean of the minimum sampled diversity to the pool.

    For each candidate the pair moments against every distinct pool member
    are predicted once; draw ``n`` takes one Gaussian sample per member and
    keeps the minimum; the result averages those ``n_samples`` minima.
    """
    pool = np.atleast_2d(np.asarray(pool_encodings, dtype=np.float64))
    if pool.shape[0] == 0 or pool.size == 0:
        raise ValidationError("diversity acquisition needs a non-empty pool")
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    cand = np.asarray(candidates, dtype=np.float64)
    single = cand.ndim == 1
    cand = np.atleast_2d(cand)
    pool = _unique_rows(pool)
    n_pool, n_cand = pool.shape[0], cand.shape[0]
    mean, var = surrogate.predict_cross(pool, cand)
    mean = mean.reshape(n_pool, n_cand).T
    var = var.reshape(n_pool, n_cand).T
    std = np.where(var > 0.0, np.sqrt(np.maximum(var, VAR_FLOOR)), 0.0)
    z = np.random.default_rng(seed).standard_normal((n_cand, n_samples, n_pool))
    draws = mean[:, None, :] + std[:, None, :] * z
    minima = draws.min(axis=2)
    # Averaging offsets from the first draw keeps deterministic cases exact.
    out = minima[:, 0] + (minima - minima[:, :1]).mean(axis=1)
    return float(out[0]) if single else out
