"""Array-backed binary regression/classification trees.

One greedy builder serves CART (Gini or squared error) and the
second-order boosting trees; the criterion only sees per-sample
statistics and their cumulative sums.
"""
from __future__ import annotations

import numpy as np


class Criterion:
    """Scores a node from its summed statistics; larger is better.

    ``stats(y, ...)`` returns the per-sample statistic rows that get summed.
    """

    def score(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def leaf(self, s: np.ndarray) -> float:
        raise NotImplementedError

    def weight(self, s: np.ndarray) -> np.ndarray:
        """Sample count (or hessian mass) carried by a node."""
        return s[..., 0]


class Gini(Criterion):
    # stats: [1, y] with y in {0, 1}; score is minus n * gini
    def score(self, s):
        n, pos = s[..., 0], s[..., 1]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(n > 0, (pos**2 + (n - pos) ** 2) / n - n, 0.0)

    def leaf(self, s):
        # fraction of positives; ties go to the positive class downstream
        return float(s[1] / s[0])


class SquaredError(Criterion):
    # stats: [1, y]; minus SSE up to a constant
    def score(self, s):
        n, t = s[..., 0], s[..., 1]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(n > 0, t**2 / n, 0.0)

    def leaf(self, s):
        return float(s[1] / s[0])


class Newton(Criterion):
    """stats: [hessian, gradient]; structure score G^2 / (H + lambda)."""

    def __init__(self, reg_lambda=1.0):
        self.reg_lambda = reg_lambda

    def score(self, s):
        h, g = s[..., 0], s[..., 1]
        return g**2 / (h + self.reg_lambda)

    def leaf(self, s):
        return float(-s[1] / (s[0] + self.reg_lambda))


class Tree:
    """Flat arrays: ``feature[i] < 0`` marks a leaf holding ``value[i]``."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _add(self, value):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return len(self.value) - 1

    def freeze(self):
        self.feature = np.asarray(self.feature, dtype=np.intp)
        self.threshold = np.asarray(self.threshold, dtype=float)
        self.left = np.asarray(self.left, dtype=np.intp)
        self.right = np.asarray(self.right, dtype=np.intp)
        self.value = np.asarray(self.value, dtype=float)
        return self

    @property
    def n_nodes(self) -> int:
        return len(self.value)

    @property
    def depth(self) -> int:
        def walk(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))
        return walk(0)

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.intp)
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return node
            rows = np.flatnonzero(inner)
            go_left = X[rows, f[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(np.asarray(X, dtype=float))]


def _best_split(X, stats, idx, crit, min_leaf, min_weight):
    """Best (gain, feature, threshold) over all features for the rows ``idx``."""
    total = stats[idx].sum(axis=0)
    parent = crit.score(total)
    best = (0.0, -1, 0.0)
    n = len(idx)
    for f in range(X.shape[1]):
        order = idx[np.argsort(X[idx, f], kind="stable")]
        xs = X[order, f]
        left = np.cumsum(stats[order], axis=0)[:-1]
        right = total - left
        # candidate cut after position i (0-based): left holds i + 1 rows
        ok = xs[:-1] < xs[1:]
        counts = np.arange(1, n)
        ok &= (counts >= min_leaf) & (n - counts >= min_leaf)
        ok &= (crit.weight(left) >= min_weight) & (crit.weight(right) >= min_weight)
        if not ok.any():
            continue
        gain = np.where(ok, crit.score(left) + crit.score(right) - parent, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > best[0] + 1e-12:
            best = (float(gain[i]), f, 0.5 * (xs[i] + xs[i + 1]))
    return best


def grow(X, stats, crit: Criterion, max_depth=8, min_leaf=1, min_weight=0.0) -> Tree:
    X = np.asarray(X, dtype=float)
    stats = np.asarray(stats, dtype=float)
    tree = Tree()

    def build(idx, depth):
        node = tree._add(crit.leaf(stats[idx].sum(axis=0)))
        if depth >= max_depth or len(idx) < 2 * min_leaf:
            return node
        gain, f, thr = _best_split(X, stats, idx, crit, min_leaf, min_weight)
        if f < 0:
            return node
        mask = X[idx, f] <= thr
        tree.feature[node], tree.threshold[node] = f, thr
        tree.left[node] = build(idx[mask], depth + 1)
        tree.right[node] = build(idx[~mask], depth + 1)
        return node

    build(np.arange(len(X)), 0)
    return tree.freeze()


class DecisionTree:
    """CART with Gini impurity (classifier) or variance reduction (regressor)."""

    def __init__(self, mode="classifier", max_depth=8, min_leaf=5):
        self.mode = mode
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.tree_: Tree | None = None

    def fit(self, X, y):
        y = np.asarray(y, dtype=float)
        stats = np.column_stack((np.ones_like(y), y))
        crit = Gini() if self.mode == "classifier" else SquaredError()
        self.tree_ = grow(X, stats, crit, self.max_depth, self.min_leaf)
        return self

    def decision_function(self, X):
        return self.tree_.predict(X)

    def predict(self, X):
        raw = self.decision_function(X)
        if self.mode == "classifier":
            return (raw >= 0.5).astype(int)
        return raw
