"""Regression trees, a probabilistic random forest and a bag of boosted models.

All three share one exact-greedy CART builder.  Features are pre-binned on
their distinct training values, so scanning a node histogram visits exactly
the split points an exact-greedy search would; thresholds are midpoints
between consecutive distinct values present in the node.  Split ties go to
the lower feature index, then the lower threshold.

Training rows are put in a canonical order before building, which makes
fitted models independent of the order the caller supplied rows in.

The hot loops are compiled with numba.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numba
import numpy as np

from .errors import ValidationError

FORMAT_VERSION = 1
_VAR_FLOOR = 1e-12


@numba.njit(cache=True)
def _node_hist(codes, y, idx, s, e, mean, feats, hs, hc):
    hs[:, :] = 0.0
    hc[:, :] = 0
    for i in range(s, e):
        r = idx[i]
        g = y[r] - mean
        for fi in range(feats.size):
            b = codes[r, feats[fi]]
            hs[fi, b] += g
            hc[fi, b] += 1


@numba.njit(cache=True)
def _grow_tree(codes, y, rows, feats, bin_vals, n_bins, max_depth, min_leaf, row_pred):
    """Grow one tree on ``rows``; writes each row's leaf value into ``row_pred``.

    ``codes`` is (n_rows, n_features) bin indices and ``bin_vals`` the sorted
    distinct values per feature (padded).  Returns node arrays trimmed to
    the number of nodes.

    Node histograms hold target sums centred on the root mean.  For shallow
    trees the larger child's histogram is the parent's minus the smaller
    child's; slots ``2*depth`` and ``2*depth + 1`` of the pool hold the two
    siblings of the current depth-first path.
    """
    n = rows.size
    cap = 2 * n + 1
    if max_depth < 30:
        cap = min(cap, 2 ** (max_depth + 1) + 1)
    feature = np.full(cap, -1, np.int32)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    value = np.zeros(cap)
    count = np.zeros(cap, np.int64)

    idx = rows.copy()
    buf = np.empty(n, rows.dtype)
    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_slot = np.empty(cap, np.int64)
    nf = feats.size
    max_b = 1
    for fi in range(nf):
        max_b = max(max_b, n_bins[feats[fi]])
    use_pool = max_depth <= 32
    n_slots = 2 * (max_depth + 1) if use_pool else 1
    hs_pool = np.zeros((n_slots, nf, max_b))
    hc_pool = np.zeros((n_slots, nf, max_b), np.int64)

    y0 = y[idx[0]]
    acc = 0.0
    for i in range(n):
        acc += y[idx[i]] - y0
    center = y0 + acc / n

    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    st_slot[0] = -1
    sp = 1
    n_nodes = 1
    while sp > 0:
        sp -= 1
        node = st_node[sp]
        s = st_start[sp]
        e = st_end[sp]
        depth = st_depth[sp]
        slot = st_slot[sp]
        m = e - s

        # Offsetting by the first target keeps constant leaves exact.
        y0 = y[idx[s]]
        acc = 0.0
        for i in range(s, e):
            acc += y[idx[i]] - y0
        mean = y0 + acc / m
        value[node] = mean
        count[node] = m
        sse = 0.0
        tot = 0.0
        for i in range(s, e):
            d = y[idx[i]] - mean
            sse += d * d
            tot += y[idx[i]] - center

        is_leaf = depth >= max_depth or m < 2 * min_leaf or sse <= 0.0
        best_gain = 0.0
        best_f = -1
        best_bin = -1
        best_thr = 0.0
        if not is_leaf:
            if slot < 0:
                slot = 2 * depth if use_pool else 0
                _node_hist(codes, y, idx, s, e, center, feats, hs_pool[slot], hc_pool[slot])
            hs = hs_pool[slot]
            hc = hc_pool[slot]
            base = tot * tot / m
            for fi in range(nf):
                f = feats[fi]
                nb = n_bins[f]
                cl = 0
                sl = 0.0
                prev = -1
                for b in range(nb):
                    c = hc[fi, b]
                    if c == 0:
                        continue
                    if prev >= 0 and cl >= min_leaf:
                        cr = m - cl
                        if cr < min_leaf:
                            break
                        sr = tot - sl
                        gain = sl * sl / cl + sr * sr / cr - base
                        if gain > best_gain:
                            best_gain = gain
                            best_f = f
                            best_bin = prev
                            lo = bin_vals[f, prev]
                            hi = bin_vals[f, b]
                            thr = 0.5 * (lo + hi)
                            if thr >= hi:
                                thr = lo
                            best_thr = thr
                    cl += c
                    sl += hs[fi, b]
                    prev = b
            if best_f < 0 or best_gain <= 1e-12 * sse:
                is_leaf = True

        if is_leaf:
            for i in range(s, e):
                row_pred[idx[i]] = mean
            continue

        # Stable partition of idx[s:e].
        nl = 0
        for i in range(s, e):
            r = idx[i]
            if codes[r, best_f] <= best_bin:
                buf[nl] = r
                nl += 1
        k = nl
        for i in range(s, e):
            r = idx[i]
            if codes[r, best_f] > best_bin:
                buf[k] = r
                k += 1
        for i in range(m):
            idx[s + i] = buf[i]
        nr = m - nl

        feature[node] = best_f
        threshold[node] = best_thr
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc

        l_slot = -1
        r_slot = -1
        if use_pool and depth + 1 < max_depth:
            l_open = nl >= 2 * min_leaf
            r_open = nr >= 2 * min_leaf
            a = 2 * (depth + 1)
            if l_open and r_open:
                # Left child is popped first and may reuse slot a; right keeps a + 1.
                if nl <= nr:
                    _node_hist(codes, y, idx, s, s + nl, center, feats, hs_pool[a], hc_pool[a])
                    hs_pool[a + 1] = hs_pool[slot] - hs_pool[a]
                    hc_pool[a + 1] = hc_pool[slot] - hc_pool[a]
                else:
                    _node_hist(codes, y, idx, s + nl, e, center, feats, hs_pool[a + 1], hc_pool[a + 1])
                    hs_pool[a] = hs_pool[slot] - hs_pool[a + 1]
                    hc_pool[a] = hc_pool[slot] - hc_pool[a + 1]
                l_slot = a
                r_slot = a + 1

        st_node[sp] = rc
        st_start[sp] = s + nl
        st_end[sp] = e
        st_depth[sp] = depth + 1
        st_slot[sp] = r_slot
        sp += 1
        st_node[sp] = lc
        st_start[sp] = s
        st_end[sp] = s + nl
        st_depth[sp] = depth + 1
        st_slot[sp] = l_slot
        sp += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        count[:n_nodes].copy(),
    )


@numba.njit(cache=True)
def _predict_grouped(X, feature, threshold, left, right, value, offsets, group, weight, n_groups):
    n = X.shape[0]
    out = np.zeros((n, n_groups))
    n_trees = offsets.size
    block = 256
    for i0 in range(0, n, block):
        i1 = min(n, i0 + block)
        for t in range(n_trees):
            base = offsets[t]
            g = group[t]
            w = weight[t]
            for i in range(i0, i1):
                node = base
                while feature[node] >= 0:
                    if X[i, feature[node]] <= threshold[node]:
                        node = base + left[node]
                    else:
                        node = base + right[node]
                out[i, g] += w * value[node]
    return out


# De Bruijn lookup: index of the single set bit of a uint64.
_DEBRUIJN = 0x03F79D71B4CB0A89
_DEBRUIJN_TABLE = np.zeros(64, np.int64)
for _i in range(64):
    _DEBRUIJN_TABLE[(((1 << _i) * _DEBRUIJN) & (2**64 - 1)) >> 58] = _i


@numba.njit(cache=True)
def _leaf_masks(X, lo, feature, threshold, sub_left, sub_right, full, offsets, sizes):
    """Bitmask of leaves consistent with the columns ``lo .. lo + X.shape[1]``.

    A leaf is inconsistent exactly when some split on those columns sends
    the row away from it, so the mask is ``full`` minus the subtree masks
    (``sub_left``/``sub_right``) on the side each such split rejects.
    Returns (n_trees, n_rows) uint64 masks.
    """
    n = X.shape[0]
    hi = lo + X.shape[1]
    n_trees = offsets.size
    out = np.empty((n_trees, n), np.uint64)
    for t in range(n_trees):
        base = offsets[t]
        for i in range(n):
            out[t, i] = full[t]
        for node in range(base, base + sizes[t]):
            f = feature[node]
            if f < lo or f >= hi:
                continue
            thr = threshold[node]
            for i in range(n):
                if X[i, f - lo] <= thr:
                    out[t, i] &= ~sub_right[node]
                else:
                    out[t, i] &= ~sub_left[node]
    return out


@numba.njit(cache=True)
def _predict_cross(mask_a, mask_b, leaf_value, leaf_offsets, group, weight, n_groups, table):
    """Prediction for every pair (a, b), shaped (n_groups, n_a, n_b)."""
    n_trees, na = mask_a.shape
    nb = mask_b.shape[1]
    out = np.zeros((n_groups, na, nb))
    for t in range(n_trees):
        g = group[t]
        w = weight[t]
        lo = leaf_offsets[t]
        for a in range(na):
            ma = mask_a[t, a]
            row = out[g, a]
            mb = mask_b[t]
            for b in range(nb):
                k = table[((ma & mb[b]) * np.uint64(0x03F79D71B4CB0A89)) >> np.uint64(58)]
                row[b] += w * leaf_value[lo + k]
    return out


@dataclass
class RegressionTree:
    """Flat binary tree. ``feature == -1`` marks a leaf; children are node indices."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        packed = _pack([self], [0], [1.0])
        return _predict_grouped(X, *packed, 1)[:, 0]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in _TREE_FIELDS}

    @classmethod
    def from_dict(cls, d) -> "RegressionTree":
        dtypes = dict(feature=np.int32, left=np.int32, right=np.int32, count=np.int64)
        return cls(**{k: np.asarray(d[k], dtype=dtypes.get(k, np.float64)) for k in _TREE_FIELDS})


_TREE_FIELDS = ("feature", "threshold", "left", "right", "value", "count")


def _pack(trees, group, weight):
    sizes = [t.feature.size for t in trees]
    offsets = np.zeros(len(trees), np.int64)
    if len(trees) > 1:
        offsets[1:] = np.cumsum(sizes)[:-1]
    return (
        np.concatenate([t.feature for t in trees]),
        np.concatenate([t.threshold for t in trees]),
        np.concatenate([t.left for t in trees]),
        np.concatenate([t.right for t in trees]),
        np.concatenate([t.value for t in trees]),
        offsets,
        np.asarray(group, np.int64),
        np.asarray(weight, np.float64),
    )


def _leaf_index(trees):
    """Leaf bookkeeping for pair prediction, or ``None`` if a tree exceeds 64 leaves.

    Returns per-node subtree leaf masks of the left and right child, the
    full mask and node count per tree, leaf values and per-tree leaf offsets.
    """
    sub_l, sub_r, full, sizes, values, offsets, pos = [], [], [], [], [], [], 0
    for t in trees:
        leaf = t.feature < 0
        if leaf.sum() > 64:
            return None
        m = t.feature.size
        masks = [0] * m
        ordinal = np.cumsum(leaf) - 1
        # Children always have larger indices than their parent.
        for node in range(m - 1, -1, -1):
            if leaf[node]:
                masks[node] = 1 << int(ordinal[node])
            else:
                masks[node] = masks[t.left[node]] | masks[t.right[node]]
        sl = np.zeros(m, np.uint64)
        sr = np.zeros(m, np.uint64)
        for node in np.flatnonzero(~leaf):
            sl[node] = masks[t.left[node]]
            sr[node] = masks[t.right[node]]
        sub_l.append(sl)
        sub_r.append(sr)
        full.append(masks[0])
        sizes.append(m)
        values.append(t.value[leaf])
        offsets.append(pos)
        pos += int(leaf.sum())
    return (
        np.concatenate(sub_l),
        np.concatenate(sub_r),
        np.asarray(full, np.uint64),
        np.asarray(sizes, np.int64),
        np.concatenate(values),
        np.asarray(offsets, np.int64),
    )


class _Binned:
    """Canonically ordered training data with per-feature distinct-value bins."""

    def __init__(self, X: np.ndarray, y: np.ndarray):
        order = np.lexsort(np.column_stack([X, y]).T)
        self.X = np.ascontiguousarray(X[order])
        self.y = np.ascontiguousarray(y[order])
        n, d = self.X.shape
        uniques = [np.unique(self.X[:, f]) for f in range(d)]
        self.n_bins = np.array([u.size for u in uniques], np.int64)
        self.bin_vals = np.zeros((d, max(1, int(self.n_bins.max()))))
        self.codes = np.empty((n, d), np.uint8 if self.n_bins.max() <= 256 else np.int32)
        for f, u in enumerate(uniques):
            self.bin_vals[f, : u.size] = u
            self.codes[:, f] = np.searchsorted(u, self.X[:, f])

    def grow(self, y, rows, feats, max_depth, min_leaf, row_pred=None):
        if row_pred is None:
            row_pred = np.empty(self.y.size)
        arrays = _grow_tree(
            self.codes, y, rows.astype(np.int64), np.sort(feats).astype(np.int64),
            self.bin_vals, self.n_bins, max_depth, min_leaf, row_pred,
        )
        return RegressionTree(*arrays)


def _check_xy(X, y, min_rows=1):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or y.ndim != 1:
        raise ValidationError("X must be 2-D and y 1-D")
    if X.shape[0] != y.shape[0]:
        raise ValidationError(f"|X|={X.shape[0]} but |y|={y.shape[0]}")
    if X.shape[0] < min_rows:
        raise ValidationError(f"need at least {min_rows} training rows")
    if not np.all(np.isfinite(y)):
        raise ValidationError("targets contain NaN or inf")
    if not np.all(np.isfinite(X)):
        raise ValidationError("features contain NaN or inf")
    return X, y


def _check_width(X, n_features):
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != n_features:
        raise ValidationError(f"expected width {n_features}, got {X.shape[1]}")
    return np.ascontiguousarray(X), single


def _n_subset(fraction, d):
    return min(d, max(1, math.ceil(fraction * d - 1e-9)))


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 10
    bootstrap: bool = True
    feature_fraction: float = 5.0 / 6.0
    min_samples_leaf: int = 3
    max_depth: int = 20


@dataclass
class ProbabilisticForest:
    """Random forest whose spread across trees serves as predictive variance."""

    trees: list[RegressionTree]
    n_features: int
    params: ForestParams = field(default_factory=ForestParams)

    def __post_init__(self):
        self._packed = _pack(self.trees, np.arange(len(self.trees)), np.ones(len(self.trees)))

    def per_tree(self, X) -> np.ndarray:
        X, _ = _check_width(X, self.n_features)
        return _predict_grouped(X, *self._packed, len(self.trees))

    def predict(self, X):
        """Mean and population variance of the per-tree predictions."""
        X, single = _check_width(X, self.n_features)
        P = _predict_grouped(X, *self._packed, len(self.trees))
        mean = P.mean(axis=1)
        var = np.maximum(P.var(axis=1), 0.0)
        if single:
            return float(mean[0]), float(var[0])
        return mean, var

    def to_dict(self) -> dict:
        return {
            "kind": "forest",
            "version": FORMAT_VERSION,
            "n_features": self.n_features,
            "params": asdict(self.params),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d) -> "ProbabilisticForest":
        return cls(
            [RegressionTree.from_dict(t) for t in d["trees"]],
            int(d["n_features"]),
            ForestParams(**d["params"]),
        )


def fit_forest(X, y, params: ForestParams = ForestParams(), seed=0) -> ProbabilisticForest:
    X, y = _check_xy(X, y)
    data = _Binned(X, y)
    n, d = X.shape
    rng = np.random.default_rng(seed)
    k = _n_subset(params.feature_fraction, d)
    trees = []
    for _ in range(params.n_trees):
        if params.bootstrap:
            rows = np.sort(rng.integers(0, n, n))
        else:
            rows = np.arange(n)
        feats = rng.choice(d, size=k, replace=False) if k < d else np.arange(d)
        trees.append(data.grow(data.y, rows, feats, params.max_depth, params.min_samples_leaf))
    return ProbabilisticForest(trees, d, params)


def predict_forest(forest: ProbabilisticForest, x):
    return forest.predict(x)


@dataclass(frozen=True)
class BoostingParams:
    n_members: int = 10
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 6
    subsample: float = 0.8
    feature_fraction: float = 0.8
    min_samples_leaf: int = 3

    def __post_init__(self):
        if self.n_members < 2:
            raise ValidationError("a boosted bag needs at least 2 members")
        if not 0 < self.subsample <= 1 or not 0 < self.feature_fraction <= 1:
            raise ValidationError("subsample fractions must lie in (0, 1]")


@dataclass
class BoostedModel:
    """One gradient-boosted member: ``init + learning_rate * sum(tree(x))``."""

    init: float
    learning_rate: float
    trees: list[RegressionTree]
    train_loss: list[float] = field(default_factory=list)


@dataclass
class BoostedTreeEnsembleBag:
    members: list[BoostedModel]
    n_features: int
    params: BoostingParams = field(default_factory=BoostingParams)

    def __post_init__(self):
        trees, group, weight = [], [], []
        for m, member in enumerate(self.members):
            trees.extend(member.trees)
            group.extend([m] * len(member.trees))
            weight.extend([member.learning_rate] * len(member.trees))
        self._init = np.array([m.init for m in self.members])
        self._packed = _pack(trees, group, weight) if trees else None
        self._leaves = _leaf_index(trees) if trees else None

    def member_predictions(self, X) -> np.ndarray:
        X, _ = _check_width(X, self.n_features)
        out = np.tile(self._init, (X.shape[0], 1))
        if self._packed is not None:
            out += _predict_grouped(X, *self._packed, len(self.members))
        return out

    def cross_member_predictions(self, A, B) -> np.ndarray:
        """Member predictions for every row of ``[A[a] | B[b]]``, ordered ``a * len(B) + b``."""
        A = np.ascontiguousarray(np.atleast_2d(np.asarray(A, dtype=np.float64)))
        B = np.ascontiguousarray(np.atleast_2d(np.asarray(B, dtype=np.float64)))
        if A.shape[1] + B.shape[1] != self.n_features:
            raise ValidationError(f"pair width {A.shape[1] + B.shape[1]} != {self.n_features}")
        out = np.tile(self._init, (A.shape[0] * B.shape[0], 1))
        if self._packed is None:
            return out
        if self._leaves is None:
            X = np.hstack([np.repeat(A, B.shape[0], axis=0), np.tile(B, (A.shape[0], 1))])
            return out + _predict_grouped(X, *self._packed, len(self.members))
        feature, threshold, _, _, _, offsets, group, weight = self._packed
        sub_l, sub_r, full, sizes, leaf_value, leaf_offsets = self._leaves
        ma = _leaf_masks(A, 0, feature, threshold, sub_l, sub_r, full, offsets, sizes)
        mb = _leaf_masks(B, A.shape[1], feature, threshold, sub_l, sub_r, full, offsets, sizes)
        P = _predict_cross(ma, mb, leaf_value, leaf_offsets, group, weight,
                           len(self.members), _DEBRUIJN_TABLE)
        return out + P.reshape(len(self.members), -1).T

    def predict_cross(self, A, B):
        """Mean and variance over members for every pair ``(A[a], B[b])``."""
        P = self.cross_member_predictions(A, B)
        return P.mean(axis=1), np.maximum(P.var(axis=1), 0.0)

    def predict_mean_var(self, X):
        X, single = _check_width(X, self.n_features)
        P = self.member_predictions(X)
        mean = P.mean(axis=1)
        var = np.maximum(P.var(axis=1), 0.0)
        if single:
            return float(mean[0]), float(var[0])
        return mean, var

    predict = predict_mean_var

    def to_dict(self) -> dict:
        return {
            "kind": "boosted_bag",
            "version": FORMAT_VERSION,
            "n_features": self.n_features,
            "params": asdict(self.params),
            "members": [
                {
                    "init": m.init,
                    "learning_rate": m.learning_rate,
                    "trees": [t.to_dict() for t in m.trees],
                }
                for m in self.members
            ],
        }

    @classmethod
    def from_dict(cls, d) -> "BoostedTreeEnsembleBag":
        members = [
            BoostedModel(
                float(m["init"]),
                float(m["learning_rate"]),
                [RegressionTree.from_dict(t) for t in m["trees"]],
            )
            for m in d["members"]
        ]
        return cls(members, int(d["n_features"]), BoostingParams(**d["params"]))


def _fit_member(data: _Binned, params: BoostingParams, rng: np.random.Generator) -> BoostedModel:
    n, d = data.X.shape
    if params.subsample < 1.0:
        size = max(1, int(round(params.subsample * n)))
        rows = np.sort(rng.choice(n, size=size, replace=False))
    else:
        rows = np.arange(n)
    k = _n_subset(params.feature_fraction, d)
    target = data.y[rows]
    y0 = target[0]
    init = float(y0 + np.sum(target - y0) / target.size)
    residual = data.y - init
    row_pred = np.zeros(n)
    trees, losses = [], []
    for _ in range(params.n_rounds):
        feats = rng.choice(d, size=k, replace=False) if k < d else np.arange(d)
        tree = data.grow(residual, rows, feats, params.max_depth, params.min_samples_leaf, row_pred)
        residual[rows] -= params.learning_rate * row_pred[rows]
        trees.append(tree)
        losses.append(float(np.mean(residual[rows] ** 2)))
        if tree.feature.size == 1 and tree.value[0] == 0.0:
            # Residuals are exactly zero; further rounds are no-ops.
            break
    return BoostedModel(init, params.learning_rate, trees, losses)


def fit_boosted_bag(X, y, params: BoostingParams = BoostingParams(), seed=0) -> BoostedTreeEnsembleBag:
    """Fit ``params.n_members`` boosted models on their own row/feature subsamples."""
    X, y = _check_xy(X, y, min_rows=2)
    data = _Binned(X, y)
    seeds = np.random.SeedSequence(seed).spawn(params.n_members)
    members = [_fit_member(data, params, np.random.default_rng(s)) for s in seeds]
    return BoostedTreeEnsembleBag(members, X.shape[1], params)


def predict_boosted_bag(bag: BoostedTreeEnsembleBag, x):
    return bag.predict_mean_var(x)


def sample_boosted_bag(bag: BoostedTreeEnsembleBag, x, n: int, seed=0) -> np.ndarray:
    """Draw ``n`` values from Normal(mean, max(var, 1e-12)) at a single input."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    mean, var = bag.predict_mean_var(np.asarray(x, dtype=np.float64).reshape(-1))
    rng = np.random.default_rng(seed)
    if var <= 0.0:
        return np.full(n, mean)
    return mean + math.sqrt(max(var, _VAR_FLOOR)) * rng.standard_normal(n)


def save_model(model, path: str | Path) -> None:
    """Write a forest or boosted bag as versioned JSON."""
    Path(path).write_text(json.dumps(model.to_dict()))


def load_model(path: str | Path):
    d = json.loads(Path(path).read_text())
    if d.get("version") != FORMAT_VERSION:
        raise ValidationError(f"unsupported model format version {d.get('version')!r}")
    if d["kind"] == "forest":
        return ProbabilisticForest.from_dict(d)
    if d["kind"] == "boosted_bag":
        return BoostedTreeEnsembleBag.from_dict(d)
    raise ValidationError(f"unknown model kind {d['kind']!r}")
