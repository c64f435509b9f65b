"""Built-in CASH target algorithms and their joint search space.

Five probabilistic classifiers: k-NN, a decision tree, Gaussian naive Bayes,
logistic regression trained by full-batch gradient descent, and a small
random forest.  Tree-based learners report Laplace-smoothed (+1) leaf class
frequencies so no probability is exactly 0 or 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.naive_bayes import GaussianNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.tree import DecisionTreeClassifier

from .configspace import ConfigSpace, HyperparameterDef, categorical, continuous, integer
from .ensembles import check_prediction_matrix, classification_error
from .errors import ValidationError

ALGORITHM = "algorithm"


def _cond(algo):
    return (ALGORITHM, algo)


@dataclass(frozen=True)
class LearnerSpec:
    name: str
    params: tuple[HyperparameterDef, ...]
    trainer: Callable  # (X, y, n_classes, hyperparameters, seed) -> predict_proba callable


def _expand_proba(proba, classes, n_classes):
    out = np.zeros((proba.shape[0], n_classes))
    out[:, np.asarray(classes, dtype=np.int64)] = proba
    return out


def _train_knn(X, y, n_classes, hp, seed):
    k = min(int(hp["k"]), X.shape[0])
    model = KNeighborsClassifier(n_neighbors=k, weights=hp["weights"]).fit(X, y)
    return lambda Z: _expand_proba(model.predict_proba(Z), model.classes_, n_classes)


def _leaf_tables(tree, X, y, n_classes):
    leaves = tree.apply(X)
    table = np.ones((tree.tree_.node_count, n_classes))
    np.add.at(table, (leaves, y), 1.0)
    return table / table.sum(axis=1, keepdims=True)


def _train_dtree(X, y, n_classes, hp, seed):
    model = DecisionTreeClassifier(
        max_depth=int(hp["max_depth"]),
        min_samples_split=int(hp["min_samples_split"]),
        criterion=hp["criterion"],
        random_state=seed,
    ).fit(X, y)
    table = _leaf_tables(model, X, y, n_classes)
    return lambda Z: table[model.apply(Z)]


def _train_gnb(X, y, n_classes, hp, seed):
    model = GaussianNB(var_smoothing=float(hp["var_smoothing"])).fit(X, y)
    return lambda Z: _expand_proba(model.predict_proba(Z), model.classes_, n_classes)


def _softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def _train_logreg(X, y, n_classes, hp, seed):
    lr = float(hp["learning_rate"])
    l2 = float(hp["l2"])
    n, d = X.shape
    Y = np.eye(n_classes)[y]
    W = np.zeros((d, n_classes))
    b = np.zeros(n_classes)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(int(hp["epochs"])):
            G = _softmax(X @ W + b) - Y
            W -= lr * (X.T @ G / n + l2 * W)
            b -= lr * G.mean(axis=0)
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                W = np.nan_to_num(W, nan=0.0, posinf=1e6, neginf=-1e6)
                b = np.nan_to_num(b, nan=0.0, posinf=1e6, neginf=-1e6)
            np.clip(W, -1e6, 1e6, out=W)
            np.clip(b, -1e6, 1e6, out=b)

    def predict(Z):
        with np.errstate(over="ignore", invalid="ignore"):
            P = _softmax(np.clip(Z @ W + b, -1e300, 1e300))
        return P

    return predict


def _train_rf(X, y, n_classes, hp, seed):
    model = RandomForestClassifier(
        n_estimators=int(hp["n_trees"]),
        max_depth=int(hp["max_depth"]),
        max_features=float(hp["feature_fraction"]),
        random_state=seed,
        n_jobs=1,
    ).fit(X, y)
    # Leaf tables count every training row that reaches the leaf.
    tables = [_leaf_tables(est, X, y, n_classes) for est in model.estimators_]

    def predict(Z):
        return np.mean([t[est.apply(Z)] for t, est in zip(tables, model.estimators_)], axis=0)

    return predict


LEARNERS: dict[str, LearnerSpec] = {
    spec.name: spec
    for spec in (
        LearnerSpec(
            "knn",
            (
                integer("knn:k", 1, 50, _cond("knn")),
                categorical("knn:weights", ["uniform", "distance"], _cond("knn")),
            ),
            _train_knn,
        ),
        LearnerSpec(
            "dtree",
            (
                integer("dtree:max_depth", 1, 20, _cond("dtree")),
                integer("dtree:min_samples_split", 2, 20, _cond("dtree")),
                categorical("dtree:criterion", ["gini", "entropy"], _cond("dtree")),
            ),
            _train_dtree,
        ),
        LearnerSpec(
            "gnb",
            (continuous("gnb:var_smoothing", 1e-10, 1e-1, log=True, condition=_cond("gnb")),),
            _train_gnb,
        ),
        LearnerSpec(
            "logreg",
            (
                continuous("logreg:learning_rate", 1e-4, 1.0, log=True, condition=_cond("logreg")),
                continuous("logreg:l2", 1e-8, 10.0, log=True, condition=_cond("logreg")),
                integer("logreg:epochs", 10, 200, _cond("logreg")),
            ),
            _train_logreg,
        ),
        LearnerSpec(
            "rf",
            (
                integer("rf:n_trees", 5, 50, _cond("rf")),
                integer("rf:max_depth", 2, 20, _cond("rf")),
                continuous("rf:feature_fraction", 0.3, 1.0, condition=_cond("rf")),
            ),
            _train_rf,
        ),
    )
}


def builtin_space(algorithms=None) -> ConfigSpace:
    """Joint space over the built-in learners (all five by default)."""
    names = list(LEARNERS) if algorithms is None else list(algorithms)
    for name in names:
        if name not in LEARNERS:
            raise ValidationError(f"unknown learner {name!r}")
    params = tuple(hp for name in names for hp in LEARNERS[name].params)
    return ConfigSpace(categorical(ALGORITHM, names), params)


def _hyperparameters(config) -> dict:
    algo = config[ALGORITHM]
    prefix = algo + ":"
    return {k[len(prefix):]: v for k, v in config.items() if k.startswith(prefix)}


def fit_learner(config, X, y, n_classes: int, seed=0) -> Callable:
    """Train the configured learner; returns ``predict_proba(X) -> (n, n_classes)``."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    algo = config[ALGORITHM]
    if algo not in LEARNERS:
        raise ValidationError(f"unknown learner {algo!r}")
    present = np.unique(y)
    if present.size == 1:
        only = int(present[0])

        def predict(Z):
            P = np.zeros((Z.shape[0], n_classes))
            P[:, only] = 1.0
            return P

    else:
        predict = LEARNERS[algo].trainer(X, y, n_classes, _hyperparameters(config), seed)

    def predict_proba(Z):
        P = np.asarray(predict(np.asarray(Z, dtype=np.float64)), dtype=np.float64)
        bad = ~np.all(np.isfinite(P), axis=1)
        P[bad] = 1.0 / n_classes
        P = np.clip(P, 0.0, 1.0)
        P /= P.sum(axis=1, keepdims=True)
        return P.astype(np.float32)

    return predict_proba


def train_and_predict(config, train, val, seed=0, n_classes: int | None = None):
    """Fit on ``train=(X, y)``; return (validation matrix, validation error)."""
    X_tr, y_tr = train
    X_va, y_va = val
    if np.asarray(X_tr).shape[1] != np.asarray(X_va).shape[1]:
        raise ValidationError("train/validation feature widths differ")
    if n_classes is None:
        n_classes = int(max(np.max(y_tr), np.max(y_va))) + 1
    predict = fit_learner(config, X_tr, y_tr, n_classes, seed)
    P = check_prediction_matrix(predict(X_va), n_classes)
    return P, classification_error(P, y_va)
