"""Append-only record of evaluated configurations and their stored predictions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .configspace import ConfigSpace, Configuration
from .ensembles import (
    check_prediction_matrix,
    uniform_prediction,
    validation_subset,
)
from .errors import ValidationError

PENALTY_ERROR = 1.0


@dataclass(frozen=True)
class Observation:
    config: Configuration
    error: float
    predictions: np.ndarray
    wall_time: float = 0.0
    status: str = "ok"
    test_predictions: np.ndarray | None = None


@dataclass
class RunHistory:
    """Observations ``(x_i, y_i, T_i)`` in evaluation order.

    Also caches the encoded configurations and the ground-truth pairwise
    diversity matrix, both extended incrementally as observations arrive.
    ``diversity_cap`` optionally restricts diversity to a fixed seeded subset
    of validation samples.
    """

    space: ConfigSpace
    n_classes: int
    diversity_cap: int | None = None
    diversity_seed: int = 0
    observations: list[Observation] = field(default_factory=list)

    def __post_init__(self):
        self._X = np.empty((0, self.space.dim))
        self._P = None
        self._div = np.zeros((0, 0))
        self._subset = None
        obs, self.observations = list(self.observations), []
        for o in obs:
            self._append(o)

    def __len__(self) -> int:
        return len(self.observations)

    def __iter__(self) -> Iterator[Observation]:
        return iter(self.observations)

    def __getitem__(self, i) -> Observation:
        return self.observations[i]

    @property
    def t(self) -> int:
        return len(self.observations)

    @property
    def configs(self) -> list[Configuration]:
        return [o.config for o in self.observations]

    @property
    def errors(self) -> np.ndarray:
        return np.array([o.error for o in self.observations], dtype=np.float64)

    @property
    def encodings(self) -> np.ndarray:
        return self._X

    @property
    def predictions(self) -> np.ndarray:
        """Stacked ``(n_observations, n_samples, n_classes)`` float32 array."""
        if self._P is None:
            raise ValidationError("history is empty")
        return self._P[: len(self.observations)]

    def add(
        self,
        config,
        error: float,
        predictions,
        wall_time: float = 0.0,
        status: str = "ok",
        test_predictions=None,
    ) -> Observation:
        config = self.space.validate(config)
        if status != "ok":
            n_samples = np.asarray(predictions).shape[0] if predictions is not None else self._n_samples()
            predictions = uniform_prediction(n_samples, self.n_classes)
            error = PENALTY_ERROR
        P = check_prediction_matrix(predictions, self.n_classes)
        error = float(error)
        if not np.isfinite(error):
            error, status = PENALTY_ERROR, "crashed"
        obs = Observation(config, error, P, float(wall_time), status, test_predictions)
        self._append(obs)
        return obs

    def _n_samples(self) -> int:
        if self._P is None:
            raise ValidationError("cannot infer validation size for a failed first observation")
        return self._P.shape[1]

    def _append(self, obs: Observation) -> None:
        P = obs.predictions
        k = len(self.observations)
        if self._P is None:
            self._P = np.empty((16,) + P.shape, dtype=np.float32)
            self._subset = validation_subset(P.shape[0], self.diversity_cap, self.diversity_seed)
        elif P.shape != self._P.shape[1:]:
            raise ValidationError(f"prediction shape {P.shape} differs from {self._P.shape[1:]}")
        if k == self._P.shape[0]:
            grown = np.empty((2 * k,) + self._P.shape[1:], dtype=np.float32)
            grown[:k] = self._P[:k]
            self._P = grown
        self._P[k] = P
        self.observations.append(obs)
        self._X = np.vstack([self._X, self.space.encode(obs.config)[None]])
        self._extend_diversity()

    def _extend_diversity(self) -> None:
        k = len(self.observations) - 1
        sub = self._P[: k + 1][:, self._subset].astype(np.float64)
        diff = sub[:k] - sub[k][None]
        row = np.mean(np.sqrt(0.5 * np.sum(diff * diff, axis=2)), axis=1)
        div = np.zeros((k + 1, k + 1))
        div[:k, :k] = self._div
        div[k, :k] = row
        div[:k, k] = row
        self._div = div

    def diversity_matrix(self) -> np.ndarray:
        """Symmetric ground-truth pairwise diversity with a zero diagonal."""
        return self._div

    def best_index(self) -> int:
        return int(np.argmin(self.errors))
