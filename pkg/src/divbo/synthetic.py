"""A cheap, deterministic black-box CASH problem for tests and diagnostics.

Every configuration maps to class probabilities on a fixed pseudo-validation
(and pseudo-test) set.  For algorithm ``a`` with unit-scaled hyperparameter
vector ``u`` (one-hot for categoricals), the logits of sample ``s`` are::

    quality_a(u) * onehot(label_s) + sum_j cos(2*pi*freq_aj . u + phase_aj) * pattern_aj[s]
                                    + base_a[s] + shared[s]

with ``quality_a(u) = peak_a - curvature * |u - optimum_a|^2``.  Patterns and
bases are fixed Gaussian noise private to an algorithm; ``shared`` is noise
common to every algorithm (irreducible by ensembling).  Hence each region of the space makes its own
mistakes: nearby configurations agree, distant ones disagree, and averaging
disagreeing learners helps.

Changing one numeric unit coordinate by ``delta`` moves the validation
predictions by at most ``lipschitz_constant * delta`` in diversity, because
softmax is 1/2-Lipschitz in the Euclidean norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .configspace import ConfigSpace, HyperparameterDef
from .ensembles import HALF_SQRT2, classification_error


@dataclass(frozen=True)
class Evaluation:
    predictions: np.ndarray
    error: float
    test_predictions: np.ndarray | None = None
    status: str = "ok"


@dataclass
class _Field:
    params: tuple[HyperparameterDef, ...]
    optimum: np.ndarray
    peak: float
    freq: np.ndarray  # (n_basis, d)
    phase: np.ndarray  # (n_basis,)
    patterns: np.ndarray  # (n_basis, n_samples, n_classes)
    base: np.ndarray  # (n_samples, n_classes)


class SyntheticProblem:
    """Seeded synthetic response surface over a conditional space."""

    def __init__(
        self,
        space: ConfigSpace | None = None,
        seed: int = 0,
        n_val: int = 300,
        n_test: int = 300,
        n_classes: int = 3,
        n_basis: int = 4,
        peak_range: tuple[float, float] = (2.5, 3.5),
        curvature: float = 3.0,
        pattern_scale: float = 1.0,
        base_scale: float = 0.8,
        shared_scale: float = 1.0,
        freq_scale: float = 0.6,
    ):
        if space is None:
            from .learners import builtin_space

            space = builtin_space()
        self.space = space
        self.seed = seed
        self.n_classes = n_classes
        self.n_val = n_val
        self.curvature = curvature
        rng = np.random.default_rng(seed)
        n = n_val + n_test
        labels = rng.integers(n_classes, size=n)
        self.val_labels = labels[:n_val]
        self.test_labels = labels[n_val:]
        self._onehot = np.eye(n_classes)[labels]
        self._shared = rng.normal(0.0, shared_scale, (n, n_classes))
        self._fields: dict = {}
        root = space.algorithm.name
        for algo in space.algorithms:
            params = tuple(
                hp for hp in space.params if hp.condition is None or hp.condition == (root, algo)
            )
            d = sum(hp.width for hp in params)
            self._fields[algo] = _Field(
                params=params,
                optimum=rng.uniform(0.2, 0.8, d),
                peak=float(rng.uniform(*peak_range)),
                freq=rng.normal(0.0, freq_scale, (n_basis, d)),
                phase=rng.uniform(0.0, 2 * math.pi, n_basis),
                patterns=rng.normal(0.0, pattern_scale, (n_basis, n, n_classes)),
                base=rng.normal(0.0, base_scale, (n, n_classes)),
            )

    def unit_vector(self, config) -> np.ndarray:
        f = self._fields[config[self.space.algorithm.name]]
        out = []
        for hp in f.params:
            value = config[hp.name]
            if hp.kind == "categorical":
                out.extend(1.0 if c == value else 0.0 for c in hp.choices)
            else:
                out.append(hp.to_unit(value))
        return np.asarray(out, dtype=np.float64)

    def _probabilities(self, config) -> np.ndarray:
        config = self.space.validate(config)
        f = self._fields[config[self.space.algorithm.name]]
        u = self.unit_vector(config)
        quality = f.peak - self.curvature * float(np.sum((u - f.optimum) ** 2))
        weights = np.cos(2 * math.pi * (f.freq @ u) + f.phase)
        logits = quality * self._onehot + np.tensordot(weights, f.patterns, axes=1) + f.base + self._shared
        logits -= logits.max(axis=1, keepdims=True)
        E = np.exp(logits)
        return (E / E.sum(axis=1, keepdims=True)).astype(np.float32)

    def evaluate(self, config, seed=None) -> Evaluation:
        P = self._probabilities(config)
        val = P[: self.n_val]
        return Evaluation(val, classification_error(val, self.val_labels), P[self.n_val :])

    @property
    def lipschitz_constant(self) -> float:
        """Diversity change per unit change of one numeric unit coordinate."""
        best = 0.0
        for f in self._fields.values():
            if f.freq.shape[1] == 0:
                continue
            # Per-sample logit-norm derivative bound, averaged over validation samples.
            norms = np.sqrt(np.sum(f.patterns[:, : self.n_val] ** 2, axis=2)).mean(axis=1)
            bound = 2 * self.curvature + 2 * math.pi * np.abs(f.freq).T @ norms
            best = max(best, float(np.max(bound)))
        return HALF_SQRT2 * 0.5 * best

    def describe(self) -> dict:
        return {
            "kind": "synthetic",
            "seed": self.seed,
            "n_val": self.n_val,
            "n_test": int(self.test_labels.size),
            "n_classes": self.n_classes,
        }


def synthetic_eval(problem: SyntheticProblem, config):
    """(validation matrix, validation error) for ``config``."""
    ev = problem.evaluate(config)
    return ev.predictions, ev.error

