"""Variance-reduction regression trees and their bootstrap ensemble."""

from __future__ import annotations

import numpy as np

from ..exceptions import ArgumentError
from ..parallel import ordered_map
from ._base import PixelRegressor

_LEAF = -1


def _best_split(X, y, min_leaf):
    """Exhaustive search for the split minimising the children's summed SSE.

    Returns ``(feature, threshold)`` or ``None`` when no split leaves at
    least ``min_leaf`` samples on both sides of a strict value gap. A
    zero-gain split is still returned, which lets a fully grown tree
    separate any set of distinct rows.
    """
    n, n_features = X.shape
    positions = np.arange(min_leaf - 1, n - min_leaf)
    if positions.size == 0:
        return None
    n_left = positions + 1.0
    n_right = n - n_left
    total = y.sum()

    best_score, best = -np.inf, None
    for f in range(n_features):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        valid = xs[positions] < xs[positions + 1]
        if not np.any(valid):
            continue
        left_sum = np.cumsum(y[order])[positions]
        # SSE_left + SSE_right = sum(y^2) - score, so maximise score
        score = left_sum ** 2 / n_left + (total - left_sum) ** 2 / n_right
        score[~valid] = -np.inf
        i = int(np.argmax(score))
        if score[i] > best_score:
            lo, hi = xs[positions[i]], xs[positions[i] + 1]
            threshold = 0.5 * (lo + hi)
            if not threshold < hi:
                threshold = lo
            best_score, best = score[i], (f, float(threshold))
    return best


class RegressionTree(PixelRegressor):
    """CART regression tree with mean-valued leaves.

    Samples with ``x[feature] <= threshold`` go to the left child.

    Parameters
    ----------
    max_depth : int or None, default=None
        ``None`` grows until leaves are pure or too small to split.
    min_leaf : int, default=5
        Minimum number of samples in each child of a split.
    """

    kind = "tree"
    _state = ("feature_", "threshold_", "left_", "right_", "value_")

    def __init__(self, max_depth=None, min_leaf=5):
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def _fit(self, X, y):
        if self.min_leaf < 1:
            raise ArgumentError("min_leaf must be at least 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ArgumentError("max_depth must be non-negative")
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(idx):
            feature.append(_LEAF)
            threshold.append(0.0)
            left.append(_LEAF)
            right.append(_LEAF)
            value.append(float(np.mean(y[idx])))
            return len(value) - 1

        stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
        while stack:
            node, idx, depth = stack.pop()
            yn = y[idx]
            if (
                len(idx) < 2 * self.min_leaf
                or (self.max_depth is not None and depth >= self.max_depth)
                or np.all(yn == yn[0])
            ):
                continue
            split = _best_split(X[idx], yn, self.min_leaf)
            if split is None:
                continue
            f, t = split
            go_left = X[idx, f] <= t
            li, ri = idx[go_left], idx[~go_left]
            feature[node], threshold[node] = f, t
            left[node], right[node] = new_node(li), new_node(ri)
            stack.append((right[node], ri, depth + 1))
            stack.append((left[node], li, depth + 1))

        self.feature_ = np.asarray(feature, dtype=np.int64)
        self.threshold_ = np.asarray(threshold, dtype=np.float64)
        self.left_ = np.asarray(left, dtype=np.int64)
        self.right_ = np.asarray(right, dtype=np.int64)
        self.value_ = np.asarray(value, dtype=np.float64)

    def _predict(self, X):
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature_[node] != _LEAF
        while np.any(active):
            rows = np.nonzero(active)[0]
            current = node[rows]
            f = self.feature_[current]
            go_left = X[rows, f] <= self.threshold_[current]
            node[rows] = np.where(go_left, self.left_[current], self.right_[current])
            active[rows] = self.feature_[node[rows]] != _LEAF
        return self.value_[node]

    @property
    def n_nodes(self) -> int:
        return int(self.value_.size)

    def _state_from_json(self, doc):
        for name in self._state:
            dtype = np.float64 if name in ("threshold_", "value_") else np.int64
            setattr(self, name, np.asarray(doc[name], dtype=dtype))


class BaggedTreesRegressor(PixelRegressor):
    """Mean of regression trees fit on bootstrap resamples.

    Tree ``i`` draws its resample from a generator spawned as child ``i`` of
    ``SeedSequence(seed)``, so the ensemble is reproducible regardless of
    the order in which trees are grown.
    """

    kind = "bagged_trees"

    def __init__(self, n_trees=30, max_depth=None, min_leaf=5, bootstrap=True, seed=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.bootstrap = bootstrap
        self.seed = seed

    def _fit(self, X, y):
        if self.n_trees < 1:
            raise ArgumentError("n_trees must be at least 1")
        m = X.shape[0]
        children = np.random.SeedSequence(self.seed).spawn(self.n_trees)

        def grow(child):
            if self.bootstrap:
                rows = np.random.default_rng(child).integers(0, m, size=m)
            else:
                rows = np.arange(m)
            tree = RegressionTree(max_depth=self.max_depth, min_leaf=self.min_leaf)
            return tree.fit(X[rows], y[rows])

        self.trees_ = ordered_map(grow, children)

    def _predict(self, X):
        total = np.zeros(X.shape[0])
        for tree in self.trees_:
            total += tree._predict(X)
        return total / len(self.trees_)

    def _state_to_json(self):
        return {"trees": [tree.to_dict() for tree in self.trees_]}

    def _state_from_json(self, doc):
        self.trees_ = [RegressionTree.from_dict(t) for t in doc["trees"]]
