from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divbo.errors import ValidationError
from divbo.treereg import (
    BoostedTreeEnsembleBag,
    BoostingParams,
    ForestParams,
    ProbabilisticForest,
    fit_boosted_bag,
    fit_forest,
    load_model,
    predict_boosted_bag,
    predict_forest,
    sample_boosted_bag,
    save_model,
)

SINGLE_CART = ForestParams(n_trees=1, bootstrap=False, feature_fraction=1.0, min_samples_leaf=1, max_depth=1000)


def naive_cart(X, y, min_leaf=1, max_depth=1000, depth=0):
    """Recursive exact-greedy CART written without any binning or histograms.

    Returns a nested tuple; ties go to the lower feature, then the lower threshold.
    """
    mean = float(np.mean(y))
    if depth >= max_depth or len(y) < 2 * min_leaf or np.all(y == y[0]):
        return ("leaf", mean)
    best = None
    base = np.sum((y - mean) ** 2)
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for lo, hi in zip(values[:-1], values[1:]):
            thr = 0.5 * (lo + hi)
            mask = X[:, f] <= thr
            nl, nr = mask.sum(), (~mask).sum()
            if nl < min_leaf or nr < min_leaf:
                continue
            sse = np.sum((y[mask] - y[mask].mean()) ** 2) + np.sum((y[~mask] - y[~mask].mean()) ** 2)
            gain = base - sse
            if best is None or gain > best[0] + 1e-12:
                best = (gain, f, thr, mask)
    if best is None or best[0] <= 1e-12 * base:
        return ("leaf", mean)
    _, f, thr, mask = best
    return (
        "split", f, thr,
        naive_cart(X[mask], y[mask], min_leaf, max_depth, depth + 1),
        naive_cart(X[~mask], y[~mask], min_leaf, max_depth, depth + 1),
    )


def naive_predict(node, x):
    while node[0] == "split":
        node = node[3] if x[node[1]] <= node[2] else node[4]
    return node[1]


class TestForest:
    def test_constant_targets(self):
        rng = np.random.default_rng(0)
        X = rng.random((40, 3))
        forest = fit_forest(X, np.full(40, 3.0), seed=1)
        mean, var = forest.predict(rng.random((7, 3)))
        np.testing.assert_array_equal(mean, 3.0)
        np.testing.assert_array_equal(var, 0.0)

    def test_single_sample(self):
        forest = fit_forest(np.array([[0.2, 0.4]]), np.array([1.5]), seed=0)
        assert len(forest.trees) == 10
        for tree in forest.trees:
            assert tree.feature.size == 1 and tree.value[0] == 1.5
        assert forest.predict(np.array([9.0, -9.0])) == (1.5, 0.0)

    def test_identity_function(self):
        X = np.linspace(0, 1, 200)[:, None]
        forest = fit_forest(X, X[:, 0], seed=0)
        mean, _ = forest.predict(np.array([0.5]))
        assert abs(mean - 0.5) <= 0.1
        oracle = naive_cart(X, X[:, 0], min_leaf=3, max_depth=20)
        assert abs(mean - naive_predict(oracle, [0.5])) <= 0.1

    def test_single_cart_matches_naive_oracle(self):
        rng = np.random.default_rng(3)
        X = np.round(rng.random((60, 3)), 2)
        y = np.sin(4 * X[:, 0]) + X[:, 1] ** 2 + rng.normal(0, 0.05, 60)
        forest = fit_forest(X, y, ForestParams(n_trees=1, bootstrap=False, feature_fraction=1.0,
                                               min_samples_leaf=3, max_depth=4), seed=0)
        oracle = naive_cart(X, y, min_leaf=3, max_depth=4)
        T = rng.random((200, 3))
        expected = np.array([naive_predict(oracle, t) for t in T])
        np.testing.assert_allclose(forest.per_tree(T)[:, 0], expected, atol=1e-12)

    def test_interpolates_training_points(self):
        rng = np.random.default_rng(5)
        X = rng.random((80, 4))
        y = rng.normal(size=80)
        forest = fit_forest(X, y, SINGLE_CART, seed=0)
        mean, var = forest.predict(X)
        np.testing.assert_array_equal(mean, y)
        np.testing.assert_array_equal(var, 0.0)

    def test_row_order_invariance_without_bootstrap(self):
        rng = np.random.default_rng(6)
        X = np.round(rng.random((70, 3)), 1)
        y = rng.normal(size=70)
        params = ForestParams(n_trees=4, bootstrap=False)
        perm = rng.permutation(70)
        a = fit_forest(X, y, params, seed=2)
        b = fit_forest(X[perm], y[perm], params, seed=2)
        T = rng.random((50, 3))
        np.testing.assert_array_equal(a.per_tree(T), b.per_tree(T))

    def test_leaves_hold_min_samples(self):
        rng = np.random.default_rng(7)
        X = rng.random((150, 2))
        forest = fit_forest(X, rng.normal(size=150), seed=0)
        for tree in forest.trees:
            assert tree.count[tree.feature < 0].min() >= 3

    def test_variance_is_population_variance_of_trees(self):
        rng = np.random.default_rng(8)
        X = rng.random((100, 3))
        forest = fit_forest(X, X.sum(axis=1) + rng.normal(0, 0.3, 100), seed=4)
        T = rng.random((20, 3))
        per = forest.per_tree(T)
        mean, var = predict_forest(forest, T)
        np.testing.assert_allclose(mean, per.mean(axis=1))
        np.testing.assert_allclose(var, per.var(axis=1))
        assert np.all(var >= 0)

    def test_deterministic(self):
        rng = np.random.default_rng(9)
        X, y = rng.random((50, 3)), rng.normal(size=50)
        T = rng.random((10, 3))
        np.testing.assert_array_equal(fit_forest(X, y, seed=1).per_tree(T), fit_forest(X, y, seed=1).per_tree(T))

    def test_errors(self):
        with pytest.raises(ValidationError):
            fit_forest(np.zeros((0, 2)), np.zeros(0))
        with pytest.raises(ValidationError):
            fit_forest(np.zeros((3, 2)), np.array([1.0, np.nan, 2.0]))
        forest = fit_forest(np.zeros((3, 2)), np.ones(3))
        with pytest.raises(ValidationError):
            forest.predict(np.zeros(3))


class TestBoostedBag:
    def test_constant_targets(self):
        rng = np.random.default_rng(0)
        X = rng.random((60, 3))
        bag = fit_boosted_bag(X, np.full(60, -2.0), BoostingParams(n_members=3, n_rounds=10), seed=0)
        mean, var = bag.predict_mean_var(rng.random((5, 3)))
        np.testing.assert_allclose(mean, -2.0)
        np.testing.assert_array_equal(var, 0.0)

    def test_step_function(self):
        X = np.linspace(0, 1, 500)[:, None]
        y = (X[:, 0] > 0.5).astype(float)
        bag = fit_boosted_bag(X, y, seed=0)
        mean, _ = predict_boosted_bag(bag, np.array([0.9]))
        assert abs(mean - 1.0) <= 0.15
        oracle = naive_cart(X, y, min_leaf=3, max_depth=6)
        assert abs(mean - naive_predict(oracle, [0.9])) <= 0.15

    def test_seed_induced_spread(self):
        rng = np.random.default_rng(1)
        X = rng.random((200, 3))
        y = X[:, 0] + rng.normal(0, 0.5, 200)
        bag = fit_boosted_bag(X, y, BoostingParams(n_members=2, n_rounds=20), seed=3)
        _, var = bag.predict_mean_var(rng.random((10, 3)))
        assert np.all(var > 0)

    def test_training_loss_non_increasing_without_subsampling(self):
        rng = np.random.default_rng(2)
        X = rng.random((150, 4))
        y = np.sin(3 * X[:, 0]) + X[:, 2] + rng.normal(0, 0.1, 150)
        params = BoostingParams(n_members=2, n_rounds=40, subsample=1.0, feature_fraction=1.0)
        bag = fit_boosted_bag(X, y, params, seed=0)
        for member in bag.members:
            losses = np.array(member.train_loss)
            assert np.all(np.diff(losses) <= 1e-12)

    def test_member_count_validation(self):
        with pytest.raises(ValidationError):
            BoostingParams(n_members=1)
        with pytest.raises(ValidationError):
            fit_boosted_bag(np.zeros((1, 2)), np.ones(1))

    def test_cross_prediction_equals_materialised_pairs(self):
        rng = np.random.default_rng(3)
        X = rng.random((400, 8))
        X[rng.random(X.shape) < 0.3] = -1.0
        y = np.cos(X.sum(axis=1))
        for depth in (3, 6, 9):
            bag = fit_boosted_bag(X, y, BoostingParams(n_members=3, n_rounds=15, max_depth=depth), seed=0)
            A = rng.random((7, 4))
            B = rng.random((90, 4))
            B[rng.random(B.shape) < 0.3] = -1.0
            pairs = np.hstack([np.repeat(A, len(B), axis=0), np.tile(B, (len(A), 1))])
            np.testing.assert_array_equal(bag.cross_member_predictions(A, B), bag.member_predictions(pairs))
            mean, var = bag.predict_cross(A, B)
            m2, v2 = bag.predict_mean_var(pairs)
            np.testing.assert_array_equal(mean, m2)
            np.testing.assert_array_equal(var, v2)


class TestSampling:
    def _bag(self, y_noise=0.4):
        rng = np.random.default_rng(4)
        X = rng.random((150, 2))
        return fit_boosted_bag(X, X[:, 0] + rng.normal(0, y_noise, 150), BoostingParams(n_members=4, n_rounds=10), seed=1)

    def test_zero_variance_returns_mean(self):
        bag = fit_boosted_bag(np.random.default_rng(0).random((20, 2)), np.full(20, 0.7),
                              BoostingParams(n_members=2, n_rounds=3))
        np.testing.assert_array_equal(sample_boosted_bag(bag, [0.1, 0.2], 50, seed=0), 0.7)

    def test_clt_bound(self):
        bag = self._bag()
        x = np.array([0.3, 0.6])
        mean, var = bag.predict_mean_var(x)
        assert var > 0
        draws = sample_boosted_bag(bag, x, 100000, seed=11)
        assert abs(draws.mean() - mean) <= 3 * np.sqrt(var / 100000)

    def test_same_seed_same_draws(self):
        bag = self._bag()
        np.testing.assert_array_equal(sample_boosted_bag(bag, [0.5, 0.5], 20, seed=3),
                                      sample_boosted_bag(bag, [0.5, 0.5], 20, seed=3))

    def test_width_and_count_errors(self):
        bag = self._bag()
        with pytest.raises(ValidationError):
            sample_boosted_bag(bag, [0.1, 0.2, 0.3], 5)
        with pytest.raises(ValidationError):
            sample_boosted_bag(bag, [0.1, 0.2], 0)


class TestSerialisation:
    def test_forest_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        X, y = rng.random((60, 3)), rng.normal(size=60)
        forest = fit_forest(X, y, seed=2)
        save_model(forest, tmp_path / "f.json")
        loaded = load_model(tmp_path / "f.json")
        assert isinstance(loaded, ProbabilisticForest)
        T = rng.random((15, 3))
        np.testing.assert_array_equal(loaded.per_tree(T), forest.per_tree(T))

    def test_bag_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        X, y = rng.random((80, 3)), rng.normal(size=80)
        bag = fit_boosted_bag(X, y, BoostingParams(n_members=2, n_rounds=5), seed=2)
        save_model(bag, tmp_path / "b.json")
        loaded = load_model(tmp_path / "b.json")
        assert isinstance(loaded, BoostedTreeEnsembleBag)
        T = rng.random((15, 3))
        np.testing.assert_array_equal(loaded.member_predictions(T), bag.member_predictions(T))

    def test_version_checked(self, tmp_path):
        (tmp_path / "m.json").write_text('{"version": 99, "kind": "forest"}')
        with pytest.raises(ValidationError):
            load_model(tmp_path / "m.json")


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 40),
    d=st.integers(1, 4),
    seed=st.integers(0, 10_000),
)
def test_cart_interpolation_property(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 5, (n, d)).astype(float)
    # Duplicate feature rows must share a target for exact interpolation.
    keys = [tuple(r) for r in X]
    table = {k: rng.normal() for k in keys}
    y = np.array([table[k] for k in keys])
    forest = fit_forest(X, y, SINGLE_CART, seed=0)
    mean, var = forest.predict(X)
    np.testing.assert_array_equal(np.atleast_1d(mean), y)
    assert np.all(np.atleast_1d(var) >= 0)
