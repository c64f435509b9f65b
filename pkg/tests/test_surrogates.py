from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divbo.configspace import ConfigSpace, categorical, continuous, sample_uniform
from divbo.errors import ValidationError
from divbo.history import RunHistory
from divbo.surrogates import (
    build_pair_training_set,
    diversity_acquisition,
    ei_from_moments,
    expected_improvement,
    fit_div,
    fit_perf,
)
from divbo.synthetic import SyntheticProblem
from divbo.treereg import BoostingParams, ForestParams


def synthetic_history(n, seed=0):
    problem = SyntheticProblem(seed=seed)
    history = RunHistory(problem.space, problem.n_classes)
    for c in sample_uniform(problem.space, n, seed + 100):
        ev = problem.evaluate(c)
        history.add(c, ev.error, ev.predictions)
    return history


def tiny_space():
    return ConfigSpace(categorical("algorithm", ["a"]), (continuous("p", 0.0, 1.0),))


class ConstantPairs:
    """Stand-in diversity surrogate with fixed per-pool-member moments."""

    def __init__(self, means, variances):
        self.means = np.asarray(means, dtype=float)
        self.variances = np.asarray(variances, dtype=float)

    def predict_cross(self, A, B):
        nb = len(B)
        return np.repeat(self.means, nb), np.repeat(self.variances, nb)


def expected_min_of_two(m1, s1, m2, s2):
    """Closed form E[min(X1, X2)] for independent Gaussians."""
    theta = math.sqrt(s1 * s1 + s2 * s2)
    a = (m2 - m1) / theta
    cdf = 0.5 * (1 + math.erf(a / math.sqrt(2)))
    pdf = math.exp(-0.5 * a * a) / math.sqrt(2 * math.pi)
    return m1 * cdf + m2 * (1 - cdf) - theta * pdf


class TestPerfSurrogate:
    def test_single_observation(self):
        space = tiny_space()
        history = RunHistory(space, 2)
        history.add(space.make("a", p=0.4), 0.3, np.eye(2))
        surrogate = fit_perf(history)
        assert surrogate.y_best == 0.3
        mean, _ = surrogate.predict(np.array([[1.0, 0.9], [1.0, 0.1]]))
        np.testing.assert_allclose(mean, 0.3)

    def test_y_best_is_min(self):
        history = synthetic_history(50)
        assert fit_perf(history).y_best == history.errors.min()

    def test_duplicated_config_zero_variance(self):
        space = tiny_space()
        history = RunHistory(space, 2)
        for p, err in [(0.2, 0.4), (0.2, 0.4), (0.7, 0.1), (0.9, 0.3)]:
            history.add(space.make("a", p=p), err, np.eye(2))
        params = ForestParams(n_trees=5, bootstrap=False, feature_fraction=1.0, min_samples_leaf=1)
        mean, var = fit_perf(history, params).predict(space.encode(space.make("a", p=0.2))[None])
        assert mean[0] == pytest.approx(0.4) and var[0] == 0.0

    def test_empty_history(self):
        with pytest.raises(ValidationError):
            fit_perf(RunHistory(tiny_space(), 2))


class TestExpectedImprovement:
    def test_examples(self):
        assert ei_from_moments([0.5], [0.0], 0.5)[0] == 0.0
        assert ei_from_moments([0.4], [0.0], 0.5)[0] == pytest.approx(0.1)
        assert ei_from_moments([0.5], [1.0], 0.5)[0] == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)

    def test_matches_closed_form(self):
        rng = np.random.default_rng(0)
        mu, sd = rng.normal(0.3, 0.2, 50), rng.uniform(0.01, 0.3, 50)
        y_best = 0.25
        z = (y_best - mu) / sd
        cdf = np.array([0.5 * (1 + math.erf(v / math.sqrt(2))) for v in z])
        pdf = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
        np.testing.assert_allclose(ei_from_moments(mu, sd**2, y_best), (y_best - mu) * cdf + sd * pdf, atol=1e-12)

    def test_scalar_input(self):
        history = synthetic_history(10)
        value = expected_improvement(fit_perf(history), history.encodings[0])
        assert isinstance(value, float) and value >= 0.0

    @settings(max_examples=50, deadline=None)
    @given(sigma=st.floats(0.0, 2.0), y_best=st.floats(-1.0, 1.0))
    def test_non_negative_and_monotone_in_mean(self, sigma, y_best):
        mu = np.linspace(-2, 2, 81)
        ei = ei_from_moments(mu, np.full_like(mu, sigma**2), y_best)
        assert np.all(ei >= 0.0)
        assert np.all(np.diff(ei) <= 1e-12)


class TestPairTrainingSet:
    def test_three_observations(self):
        history = synthetic_history(3)
        X, y = build_pair_training_set(history)
        assert X.shape == (9, 2 * history.encodings.shape[1])
        assert np.count_nonzero(y == 0.0) >= 3
        assert np.all(y[[0, 4, 8]] == 0.0)

    def test_orthogonal_predictions(self):
        space = tiny_space()
        history = RunHistory(space, 2)
        history.add(space.make("a", p=0.1), 0.0, np.eye(2)[[0, 0, 1]])
        history.add(space.make("a", p=0.9), 1.0, np.eye(2)[[1, 1, 0]])
        _, y = build_pair_training_set(history)
        np.testing.assert_array_equal(y, [0.0, 1.0, 1.0, 0.0])

    def test_closed_under_swap(self):
        history = synthetic_history(12)
        X, y = build_pair_training_set(history)
        d = history.encodings.shape[1]
        index = {row.tobytes(): i for i, row in enumerate(X)}
        for i, row in enumerate(X):
            j = index[np.concatenate([row[d:], row[:d]]).tobytes()]
            assert y[i] == y[j]


class TestDivSurrogate:
    def test_identical_predictions_fit_zero(self):
        space = tiny_space()
        history = RunHistory(space, 2)
        P = np.array([[0.3, 0.7], [0.6, 0.4]])
        for p in (0.1, 0.5, 0.9, 0.3):
            history.add(space.make("a", p=p), 0.5, P)
        surrogate = fit_div(history)
        X, _ = build_pair_training_set(history)
        mean, _ = surrogate.model.predict_mean_var(X)
        assert np.max(np.abs(mean)) < 1e-6

    def test_needs_two_observations(self):
        with pytest.raises(ValidationError):
            fit_div(synthetic_history(1))

    def test_swap_asymmetry_small(self):
        history = synthetic_history(40)
        surrogate = fit_div(history, seed=1)
        X = history.encodings
        mean_ab, _ = surrogate.predict_cross(X, X)
        M = mean_ab.reshape(len(X), len(X))
        assert np.mean(np.abs(M - M.T)) <= 0.05

    def test_predict_pairs_matches_cross(self):
        history = synthetic_history(15)
        surrogate = fit_div(history, seed=2)
        A, B = history.encodings[:4], history.encodings[4:]
        cross, _ = surrogate.predict_cross(A, B)
        pairs, _ = surrogate.predict_pairs(np.repeat(A, len(B), axis=0), np.tile(B, (len(A), 1)))
        np.testing.assert_array_equal(cross, pairs)


class TestDiversityAcquisition:
    def test_single_member_zero_variance(self):
        for n in (1, 10, 100):
            assert diversity_acquisition(ConstantPairs([0.2], [0.0]), [[0.0]], [0.5], n) == 0.2

    def test_min_of_constants(self):
        value = diversity_acquisition(ConstantPairs([0.1, 0.3], [0.0, 0.0]), [[0.0], [1.0]], [0.5], 1000)
        assert value == 0.1

    def test_self_pair_penalised(self):
        history = synthetic_history(40)
        converged = BoostingParams(max_depth=10, min_samples_leaf=1, subsample=1.0)
        surrogate = fit_div(history, converged, seed=0)
        X = history.encodings
        values = diversity_acquisition(surrogate, X[:5], X[:5], 10, seed=3)
        assert np.all(values <= 0.05)

    def test_converges_to_expected_min(self):
        m1, s1, m2, s2 = 0.3, 0.1, 0.35, 0.2
        n = 200_000
        value = diversity_acquisition(ConstantPairs([m1, m2], [s1**2, s2**2]), [[0.0], [1.0]], [0.5], n, seed=7)
        bound = 3 * math.sqrt((s1**2 + s2**2) / n)
        assert abs(value - expected_min_of_two(m1, s1, m2, s2)) <= bound

    def test_duplicate_pool_members_count_once(self):
        surrogate = ConstantPairs([0.4], [0.0])
        assert diversity_acquisition(surrogate, [[0.0], [0.0], [0.0]], [0.5]) == 0.4

    def test_errors(self):
        with pytest.raises(ValidationError):
            diversity_acquisition(ConstantPairs([0.1], [0.0]), np.empty((0, 1)), [0.5])
        with pytest.raises(ValidationError):
            diversity_acquisition(ConstantPairs([0.1], [0.0]), [[0.0]], [0.5], 0)
