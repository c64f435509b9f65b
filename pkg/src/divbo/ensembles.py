"""Stored predictions, pairwise diversity and greedy ensemble selection.

Prediction matrices are plain ``(n_samples, n_classes)`` float32 arrays of
class probabilities.  Functions that need the whole observation history take
``predictions``: either a stacked ``(n_models, n_samples, n_classes)`` array,
a list of matrices, or any object with a ``predictions`` attribute (such as
:class:`divbo.history.RunHistory`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError

HALF_SQRT2 = math.sqrt(2.0) / 2.0
ROW_SUM_TOL = 1e-4


def check_prediction_matrix(values, n_classes: int | None = None) -> np.ndarray:
    """Validate class probabilities and return them as a float32 array."""
    P = np.asarray(values, dtype=np.float32)
    if P.ndim != 2 or P.shape[0] < 1 or P.shape[1] < 1:
        raise ValidationError(f"prediction matrix must be 2-D and non-empty, got {P.shape}")
    if n_classes is not None and P.shape[1] != n_classes:
        raise ValidationError(f"expected {n_classes} classes, got {P.shape[1]}")
    if not np.all(np.isfinite(P)) or P.min() < 0.0 or P.max() > 1.0:
        raise ValidationError("probabilities must lie in [0, 1]")
    if np.max(np.abs(P.sum(axis=1, dtype=np.float64) - 1.0)) > ROW_SUM_TOL:
        raise ValidationError("prediction rows must sum to 1")
    return P


def uniform_prediction(n_samples: int, n_classes: int) -> np.ndarray:
    """Placeholder predictions for a crashed learner."""
    return np.full((n_samples, n_classes), 1.0 / n_classes, dtype=np.float32)


def _stack(predictions) -> np.ndarray:
    predictions = getattr(predictions, "predictions", predictions)
    if isinstance(predictions, np.ndarray) and predictions.ndim == 3:
        return predictions
    if len(predictions) == 0:
        raise ValidationError("no stored predictions")
    return np.stack([np.asarray(p) for p in predictions])


def _same_shape(p, q):
    p = np.asarray(p)
    q = np.asarray(q)
    if p.shape != q.shape:
        raise ValidationError(f"shape mismatch {p.shape} vs {q.shape}")
    return p, q


def diversity(p, q) -> float:
    """Scaled mean Euclidean distance between two learners' class probabilities.

    The ``sqrt(2)/2`` factor maps the largest possible row distance (two
    opposite one-hot rows) to 1, so the result lies in ``[0, 1]``.
    """
    p, q = _same_shape(p, q)
    diff = p.astype(np.float64) - q.astype(np.float64)
    # sqrt(sum / 2) equals (sqrt(2)/2) * sqrt(sum) but is exact at the extremes.
    return float(np.mean(np.sqrt(0.5 * np.sum(diff * diff, axis=1))))


def diversity_to_many(p, others) -> np.ndarray:
    """``diversity(p, others[k])`` for every k, vectorised."""
    others = np.asarray(others)
    p = np.asarray(p)
    if others.shape[1:] != p.shape:
        raise ValidationError(f"shape mismatch {p.shape} vs {others.shape[1:]}")
    diff = others.astype(np.float64) - p.astype(np.float64)[None]
    return np.mean(np.sqrt(0.5 * np.sum(diff * diff, axis=2)), axis=1)


def validation_subset(n_samples: int, cap: int | None, seed=0) -> np.ndarray:
    """First ``cap`` indices of a seeded shuffle (all indices when ``cap`` is None)."""
    if cap is None or cap >= n_samples:
        return np.arange(n_samples)
    perm = np.random.default_rng(seed).permutation(n_samples)
    return np.sort(perm[:cap])


@dataclass(frozen=True)
class EnsemblePool:
    """Multiset of observation indices, in the order they were added."""

    members: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(int(m) for m in self.members))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def unique(self) -> list[int]:
        """Distinct members in first-appearance order."""
        return list(dict.fromkeys(self.members))

    def counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for m in self.members:
            out[m] = out.get(m, 0) + 1
        return out

    def same_multiset(self, other: "EnsemblePool | None") -> bool:
        return other is not None and sorted(self.members) == sorted(other.members)


def _check_pool(pool, n_models):
    members = pool.members if isinstance(pool, EnsemblePool) else tuple(pool)
    if len(members) == 0:
        raise ValidationError("ensemble pool is empty")
    for m in members:
        if not 0 <= m < n_models:
            raise ValidationError(f"pool index {m} out of range")
    return members


def ensemble_predict(predictions, pool) -> np.ndarray:
    """Uniform average of the pool's matrices, counting repeated members."""
    P = _stack(predictions)
    members = _check_pool(pool, P.shape[0])
    total = np.sum(P[list(members)].astype(np.float64), axis=0)
    return (total / len(members)).astype(np.float32)


def _check_labels(labels, n_samples, n_classes):
    labels = np.asarray(labels)
    if labels.shape != (n_samples,):
        raise ValidationError(f"expected {n_samples} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValidationError("label out of range")
    return labels.astype(np.int64)


def classification_error(p, labels) -> float:
    """Fraction of rows whose argmax (lowest index on ties) differs from the label."""
    p = np.asarray(p)
    labels = _check_labels(labels, p.shape[0], p.shape[1])
    return float(np.mean(np.argmax(p, axis=1) != labels))


def ensemble_selection(predictions, labels, size: int = 25) -> EnsemblePool:
    """Greedy forward selection with replacement.

    Each of ``size`` rounds adds the model whose inclusion gives the lowest
    validation error of the uniform average; ties go to the lowest index.
    """
    P = _stack(predictions).astype(np.float64)
    n_models, n_samples, n_classes = P.shape
    labels = _check_labels(labels, n_samples, n_classes)
    if size < 1:
        raise ValidationError("ensemble size must be >= 1")
    running = np.zeros((n_samples, n_classes))
    members = []
    for _ in range(size):
        # Dividing by the member count preserves each row's argmax, so sums suffice.
        cand = running[None] + P
        wrong = np.count_nonzero(np.argmax(cand, axis=2) != labels[None], axis=1)
        best = int(np.argmin(wrong))
        members.append(best)
        running += P[best]
    return EnsemblePool(tuple(members))


def min_diversity_to_pool(predictions, pool, candidate: int) -> float:
    """Smallest diversity between ``candidate`` and any distinct pool member."""
    P = _stack(predictions)
    members = _check_pool(pool, P.shape[0])
    if not 0 <= candidate < P.shape[0]:
        raise ValidationError(f"candidate index {candidate} out of range")
    uniq = list(dict.fromkeys(members))
    return float(min(diversity(P[m], P[candidate]) for m in uniq))


def pairwise_disagreement(p, q) -> float:
    """Fraction of samples where the two argmax labels differ."""
    p, q = _same_shape(p, q)
    return float(np.mean(np.argmax(p, axis=1) != np.argmax(q, axis=1)))


def mean_pairwise_disagreement(predictions, pool) -> float:
    """Average disagreement over distinct pairs of distinct pool members (0 if fewer than two)."""
    P = _stack(predictions)
    uniq = list(dict.fromkeys(_check_pool(pool, P.shape[0])))
    pairs = [(a, b) for i, a in enumerate(uniq) for b in uniq[i + 1 :]]
    if not pairs:
        return 0.0
    return float(np.mean([pairwise_disagreement(P[a], P[b]) for a, b in pairs]))


def save_prediction_matrix(directory: str | Path, index: int, matrix) -> Path:
    """Write ``<index>.f32`` (little-endian, row-major) plus a ``<index>.json`` sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    P = np.ascontiguousarray(np.asarray(matrix, dtype="<f4"))
    path = directory / f"{index}.f32"
    path.write_bytes(P.tobytes(order="C"))
    meta = {"n_samples": int(P.shape[0]), "n_classes": int(P.shape[1])}
    (directory / f"{index}.json").write_text(json.dumps(meta))
    return path


def load_prediction_matrix(directory: str | Path, index: int) -> np.ndarray:
    directory = Path(directory)
    meta = json.loads((directory / f"{index}.json").read_text())
    raw = np.frombuffer((directory / f"{index}.f32").read_bytes(), dtype="<f4")
    expected = meta["n_samples"] * meta["n_classes"]
    if raw.size != expected:
        raise ValidationError(f"{index}.f32 holds {raw.size} values, sidecar says {expected}")
    return raw.reshape(meta["n_samples"], meta["n_classes"]).astype(np.float32)


def average_member_error(errors: Sequence[float], pool) -> float:
    """Mean validation error of the pool's distinct base learners."""
    uniq = list(dict.fromkeys(_check_pool(pool, len(errors))))
    return float(np.mean([errors[m] for m in uniq]))
