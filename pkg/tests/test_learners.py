from __future__ import annotations

import numpy as np
import pytest

from divbo.configspace import sample_uniform
from divbo.ensembles import check_prediction_matrix
from divbo.errors import ValidationError
from divbo.learners import builtin_space, fit_learner, train_and_predict


def blobs(n=200, sep=6.0, seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = rng.normal(size=(n, 2)) + sep * y[:, None]
    perm = rng.permutation(n)
    return X[perm], y[perm]


def split(X, y, frac=0.7):
    k = int(len(y) * frac)
    return (X[:k], y[:k]), (X[k:], y[k:])


class TestBuiltinSpace:
    def test_selector(self):
        space = builtin_space()
        assert len(space.algorithm.choices) == 5

    def test_thousand_samples_valid(self):
        space = builtin_space()
        for c in sample_uniform(space, 1000, 0):
            space.validate(c)

    def test_unknown_learner(self):
        with pytest.raises(ValidationError):
            builtin_space(["svm"])


class TestLearners:
    def test_logreg_separable(self):
        space = builtin_space()
        config = space.make("logreg", **{"logreg:learning_rate": 0.5, "logreg:l2": 1e-6, "logreg:epochs": 200})
        train, val = split(*blobs())
        _, err = train_and_predict(config, train, val)
        assert err <= 0.05

    def test_naive_bayes_indistinguishable_classes(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(2000, 1))
        y = rng.integers(0, 2, 2000)
        config = builtin_space().make("gnb", **{"gnb:var_smoothing": 1e-9})
        _, err = train_and_predict(config, (X[:1000], y[:1000]), (X[1000:], y[1000:]))
        assert abs(err - 0.5) <= 0.1

    def test_stump_cannot_fit_xor(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(-1, 1, (800, 2))
        y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
        config = builtin_space().make(
            "dtree", **{"dtree:max_depth": 1, "dtree:min_samples_split": 2, "dtree:criterion": "gini"}
        )
        _, err = train_and_predict(config, (X[:400], y[:400]), (X[400:], y[400:]))
        assert err >= 0.4

    def test_one_nn_memorises(self):
        X, y = blobs(sep=0.5, seed=3)
        config = builtin_space().make("knn", **{"knn:k": 1, "knn:weights": "uniform"})
        _, err = train_and_predict(config, (X, y), (X, y))
        assert err == 0.0

    def test_knn_all_neighbours_gives_class_distribution(self):
        X, y = blobs(n=40, seed=4)
        config = builtin_space().make("knn", **{"knn:k": 40, "knn:weights": "uniform"})
        P = fit_learner(config, X, y, 2)(X[:7])
        np.testing.assert_allclose(P, 0.5, atol=1e-7)

    def test_single_class_training_data(self):
        X = np.random.default_rng(5).normal(size=(10, 2))
        for algo, hp in [
            ("knn", {"knn:k": 3, "knn:weights": "distance"}),
            ("gnb", {"gnb:var_smoothing": 1e-5}),
            ("logreg", {"logreg:learning_rate": 0.1, "logreg:l2": 1e-3, "logreg:epochs": 20}),
        ]:
            P = fit_learner(builtin_space().make(algo, **hp), X, np.full(10, 2), 3)(X)
            np.testing.assert_array_equal(P, np.eye(3, dtype=np.float32)[[2] * 10])

    def test_overflow_is_clamped(self):
        X, y = blobs(seed=6)
        X = X * 1e150
        config = builtin_space().make("logreg", **{"logreg:learning_rate": 1.0, "logreg:l2": 1e-8,
                                                   "logreg:epochs": 50})
        with np.errstate(all="ignore"):
            P, _ = train_and_predict(config, (X, y), (X, y))
        check_prediction_matrix(P, 2)

    def test_width_mismatch(self):
        config = builtin_space().make("gnb", **{"gnb:var_smoothing": 1e-5})
        with pytest.raises(ValidationError):
            train_and_predict(config, (np.zeros((4, 2)), np.array([0, 1, 0, 1])), (np.zeros((2, 3)), np.array([0, 1])))

    def test_random_configs_row_stochastic_and_deterministic(self):
        rng = np.random.default_rng(7)
        space = builtin_space()
        data = [split(*blobs(n=120, sep=s, seed=i)) for i, s in enumerate((0.5, 2.0, 4.0))]
        for i, config in enumerate(sample_uniform(space, 1000, 8)):
            train, val = data[i % 3]
            seed = int(rng.integers(1000))
            if i % 50 == 0:
                a, ea = train_and_predict(config, train, val, seed)
                b, eb = train_and_predict(config, train, val, seed)
                np.testing.assert_array_equal(a, b)
                assert ea == eb
            elif config["algorithm"] in ("knn", "gnb", "dtree"):
                # Cheap learners cover the full 1000 draws; the others are sampled above.
                P, _ = train_and_predict(config, train, val, seed)
                check_prediction_matrix(P, 2)
