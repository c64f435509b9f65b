"""Diversity-aware Bayesian optimisation for post-hoc ensembles, plus baselines.

Methods
-------
``RS`` / ``RS-ES``
    Uniform random search; ``-ES`` builds a final ensemble.
``BO`` / ``BO-ES``
    Random-forest surrogate with expected improvement.
``DivBO-`` / ``DivBO``
    BO whose candidate ranking also rewards predicted diversity from the
    current temporary ensemble; ``DivBO-`` reports the best single learner.

All methods share the per-iteration random streams, so with ``beta = 0``
DivBO suggests exactly what BO-ES suggests.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np
from scipy.stats import rankdata

from .configspace import ConfigSpace, Configuration, sample_local, sample_uniform, uniform_batch
from .ensembles import (
    EnsemblePool,
    average_member_error,
    classification_error,
    ensemble_predict,
    ensemble_selection,
    mean_pairwise_disagreement,
    min_diversity_to_pool,
    uniform_prediction,
)
from .errors import ValidationError
from .history import PENALTY_ERROR, RunHistory
from .surrogates import (
    DivSurrogate,
    PerfSurrogate,
    diversity_acquisition,
    expected_improvement,
    fit_div,
    fit_perf,
)
from .treereg import BoostingParams, ForestParams

METHODS = ("RS", "BO", "DivBO-", "RS-ES", "BO-ES", "DivBO")
ENSEMBLE_METHODS = ("RS-ES", "BO-ES", "DivBO")


@dataclass(frozen=True)
class DivBOConfig:
    budget: int = 250
    init_random: int = 5
    n_global_candidates: int = 4950
    n_local_candidates: int = 50
    beta: float = 0.05
    tau: float = 0.2
    ensemble_size: int = 25
    n_div_samples: int = 10
    seed: int = 0
    forest: ForestParams = ForestParams()
    boosting: BoostingParams = BoostingParams()
    diversity_cap: int | None = None
    time_limit: float | None = None

    def __post_init__(self):
        if self.beta < 0:
            raise ValidationError("beta must be >= 0")
        if self.tau <= 0:
            raise ValidationError("tau must be > 0")
        if self.n_global_candidates < 1 or self.n_local_candidates < 1:
            raise ValidationError("candidate counts must be >= 1")
        if self.init_random < 1:
            raise ValidationError("init_random must be >= 1")
        if self.budget < 1:
            raise ValidationError("budget must be >= 1")
        if self.ensemble_size < 1 or self.n_div_samples < 1:
            raise ValidationError("ensemble_size and n_div_samples must be >= 1")

    @classmethod
    def desk(cls, **overrides) -> "DivBOConfig":
        """Lighter diversity surrogate for single-core experiments."""
        base = dict(
            boosting=BoostingParams(
                n_members=5, n_rounds=20, learning_rate=0.3, max_depth=6, subsample=0.5
            ),
        )
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DivBOConfig":
        d = dict(d)
        if isinstance(d.get("forest"), dict):
            d["forest"] = ForestParams(**d["forest"])
        if isinstance(d.get("boosting"), dict):
            d["boosting"] = BoostingParams(**d["boosting"])
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


def weight_schedule(t, beta: float = 0.05, tau: float = 0.2) -> float:
    """Saturating diversity weight ``beta * (sigmoid(tau * t) - 0.5)``, in ``[0, beta/2)``."""
    if t < 0:
        raise ValidationError("iteration must be >= 0")
    return beta * (1.0 / (1.0 + math.exp(-tau * t)) - 0.5)


def rank_values(values, maximize: bool = True) -> np.ndarray:
    """Competition ranks, 1 = best; tied values share the lowest rank."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValidationError("nothing to rank")
    if np.any(np.isnan(values)):
        raise ValidationError("cannot rank NaN")
    key = -values if maximize else values
    return rankdata(key, method="min").astype(np.int64)


def combined_acquisition(r_perf, r_div, w: float) -> np.ndarray:
    r_perf = np.asarray(r_perf, dtype=np.float64)
    r_div = np.asarray(r_div, dtype=np.float64)
    if r_perf.shape != r_div.shape:
        raise ValidationError("rank vectors differ in length")
    return r_perf + w * r_div


@dataclass
class Suggestion:
    config: Configuration
    diagnostics: dict = field(default_factory=dict)


def _iteration_seeds(seed: int, t: int) -> list[int]:
    # global candidates, local candidates, perf fit, div fit, div sampling, fallback, evaluation
    return [int(s) for s in np.random.SeedSequence([int(seed), int(t)]).generate_state(7)]


def suggest(
    history: RunHistory,
    space: ConfigSpace,
    perf: PerfSurrogate,
    div: DivSurrogate | None,
    pool: EnsemblePool | None,
    cfg: DivBOConfig,
    seeds=None,
) -> Suggestion:
    """Pick the candidate minimising ``R_perf + w * R_div``.

    With ``div=None`` (plain BO) only the EI rank is used.  Candidates whose
    encoding matches an evaluated configuration are discarded first.
    """
    t = len(history)
    if seeds is None:
        seeds = _iteration_seeds(cfg.seed, t)
    anchors = list(zip(history.configs, history.errors))
    batch = uniform_batch(space, cfg.n_global_candidates, seeds[0])
    local = sample_local(space, anchors, cfg.n_local_candidates, seeds[1])
    enc = np.vstack([batch.encode(), space.encode_many(local, validate=False)])
    seen = {row.tobytes() for row in history.encodings}
    keep = [i for i in range(enc.shape[0]) if enc[i].tobytes() not in seen]
    if keep:
        enc = enc[keep]
    else:
        # Every candidate was already evaluated: fall back to one fresh draw.
        local = sample_uniform(space, 1, seeds[5])
        keep = [len(batch)]
        enc = space.encode_many(local)

    def pick(j):
        i = keep[j]
        return batch.config(i) if i < len(batch) else local[i - len(batch)]

    ei = expected_improvement(perf, enc)
    r_perf = rank_values(ei)
    w = 0.0
    r_div = np.zeros_like(r_perf)
    a_div = None
    if div is not None and pool is not None and len(pool) > 0:
        w = weight_schedule(t, cfg.beta, cfg.tau)
        pool_enc = history.encodings[pool.unique()]
        a_div = diversity_acquisition(div, pool_enc, enc, cfg.n_div_samples, seeds[4])
        r_div = rank_values(a_div)
    alpha = combined_acquisition(r_perf, r_div, w)
    best = int(np.argmin(alpha))
    diagnostics = {
        "w": w,
        "r_perf": int(r_perf[best]),
        "r_div": int(r_div[best]) if a_div is not None else None,
        "alpha": float(alpha[best]),
        "ei": float(ei[best]),
        "div_acq": float(a_div[best]) if a_div is not None else None,
        "n_candidates": int(enc.shape[0]),
        "pool": list(pool.members) if pool is not None else [],
    }
    return Suggestion(pick(best), diagnostics)


@dataclass
class RunResult:
    method: str
    history: RunHistory
    trace: list[dict]
    final_pool: EnsemblePool
    val_error: float
    test_error: float | None
    status: str
    config: DivBOConfig
    elapsed: float = 0.0

    @property
    def final_predictions(self) -> np.ndarray:
        return ensemble_predict(self.history, self.final_pool)

    def summary(self) -> dict:
        pool = self.final_pool
        return {
            "method": self.method,
            "status": self.status,
            "n_observations": len(self.history),
            "final_pool": list(pool.members),
            "val_error": self.val_error,
            "test_error": self.test_error,
            "best_single_val_error": float(self.history.errors.min()),
            "avg_member_error": average_member_error(self.history.errors, pool),
            "pairwise_disagreement": mean_pairwise_disagreement(self.history, pool),
            "elapsed": self.elapsed,
        }


def _family(method: str) -> str:
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; choose from {METHODS}")
    return method.split("-")[0]


def _test_error(history, pool, labels):
    if labels is None:
        return None
    mats = [history[m].test_predictions for m in pool.members]
    if any(m is None for m in mats):
        return None
    stacked = np.stack(mats).astype(np.float64)
    return classification_error(stacked.mean(axis=0).astype(np.float32), labels)


def run(method: str, problem, cfg: DivBOConfig = DivBOConfig(), callback: Callable | None = None) -> RunResult:
    """Run one optimisation loop of ``cfg.budget`` evaluations.

    ``problem`` needs ``space``, ``n_classes``, ``val_labels`` and
    ``evaluate(config, seed)`` returning an object with ``predictions``,
    ``error`` and optionally ``test_predictions``/``status``;
    ``test_labels`` is optional.  ``callback(record)`` is invoked after every
    iteration.
    """
    family = _family(method)
    space = problem.space
    labels = np.asarray(problem.val_labels)
    history = RunHistory(space, problem.n_classes, cfg.diversity_cap, cfg.seed)
    trace: list[dict] = []
    status = "complete"
    start = time.perf_counter()
    for t in range(cfg.budget):
        if cfg.time_limit is not None and time.perf_counter() - start > cfg.time_limit:
            status = "time_limit"
            break
        seeds = _iteration_seeds(cfg.seed, t)
        pool = ensemble_selection(history, labels, cfg.ensemble_size) if t > 0 else None
        pool_error = (
            classification_error(ensemble_predict(history, pool), labels) if pool is not None else None
        )
        if t < cfg.init_random or family == "RS":
            suggestion = Suggestion(sample_uniform(space, 1, seeds[0])[0], {"w": 0.0})
        else:
            perf = fit_perf(history, cfg.forest, seeds[2])
            div = fit_div(history, cfg.boosting, seeds[3]) if family == "DivBO" else None
            suggestion = suggest(history, space, perf, div, pool, cfg, seeds)

        t0 = time.perf_counter()
        try:
            ev = problem.evaluate(suggestion.config, seed=seeds[6])
            obs = history.add(
                suggestion.config,
                ev.error,
                ev.predictions,
                wall_time=time.perf_counter() - t0,
                status=getattr(ev, "status", "ok"),
                test_predictions=getattr(ev, "test_predictions", None),
            )
        except (ValidationError, ArithmeticError, ValueError, RuntimeError, MemoryError):
            obs = history.add(
                suggestion.config, PENALTY_ERROR, uniform_prediction(labels.size, problem.n_classes),
                time.perf_counter() - t0, status="crashed",
            )
        idx = len(history) - 1
        record = {
            "iteration": t,
            "config": suggestion.config.to_dict(),
            "error": obs.error,
            "status": obs.status,
            "w": float(suggestion.diagnostics.get("w", 0.0)),
            "min_diversity": min_diversity_to_pool(history, pool, idx) if pool is not None else None,
            "pool": list(pool.members) if pool is not None else [],
            "ensemble_val_error": pool_error,
            "best_val_error": float(history.errors.min()),
        }
        trace.append(record)
        if callback is not None:
            callback(record)

    if len(history) == 0:
        raise ValidationError("time limit left no room for a single evaluation")
    if method in ENSEMBLE_METHODS:
        final = ensemble_selection(history, labels, cfg.ensemble_size)
    else:
        final = EnsemblePool((history.best_index(),))
    val_error = classification_error(ensemble_predict(history, final), labels)
    test_error = _test_error(history, final, getattr(problem, "test_labels", None))
    return RunResult(
        method, history, trace, final, val_error, test_error, status, cfg,
        time.perf_counter() - start,
    )


def effective_pool_updates(trace: list[dict], window: int) -> int:
    """Iterations in the trailing ``window`` whose temporary pool changed and got strictly better."""
    window = min(max(int(window), 0), len(trace))
    count = 0
    for i in range(len(trace) - window, len(trace)):
        if i == 0:
            continue
        cur, prev = trace[i], trace[i - 1]
        if not cur["pool"] or not prev["pool"]:
            continue
        if sorted(cur["pool"]) == sorted(prev["pool"]):
            continue
        if cur["ensemble_val_error"] < prev["ensemble_val_error"]:
            count += 1
    return count

