"""Second-order gradient boosted trees (logistic or squared loss)."""
from __future__ import annotations

import numpy as np

from .tree import Newton, grow


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class _Squared:
    @staticmethod
    def base(y):
        return float(np.mean(y))

    @staticmethod
    def grad_hess(y, f):
        return f - y, np.ones_like(y)

    @staticmethod
    def loss(y, f):
        return float(0.5 * np.mean((f - y) ** 2))


class _Logistic:
    @staticmethod
    def base(y):
        p = np.clip(np.mean(y), 1e-6, 1 - 1e-6)
        return float(np.log(p / (1 - p)))

    @staticmethod
    def grad_hess(y, f):
        p = _sigmoid(f)
        return p - y, p * (1.0 - p)

    @staticmethod
    def loss(y, f):
        # log(1 + e^f) - y f, evaluated stably
        return float(np.mean(np.logaddexp(0.0, f) - y * f))


class GradientBoostedTrees:
    """Newton boosting: each tree fits gradient/hessian pairs with
    leaf weight ``-G / (H + lambda)``, shrunk by the learning rate.

    ``loss_trace_`` records the training loss after every round.
    """

    def __init__(self, mode="regressor", n_estimators=100, max_depth=4,
                 learning_rate=0.1, reg_lambda=1.0, min_child_weight=1.0):
        self.mode = mode
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.reg_lambda = reg_lambda
        self.min_child_weight = min_child_weight

    @property
    def _loss(self):
        return _Logistic if self.mode == "classifier" else _Squared

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        loss = self._loss
        self.base_score_ = loss.base(y)
        f = np.full(len(y), self.base_score_)
        crit = Newton(self.reg_lambda)
        self.trees_ = []
        self.loss_trace_ = [loss.loss(y, f)]
        for _ in range(self.n_estimators):
            g, h = loss.grad_hess(y, f)
            if np.max(np.abs(g)) < 1e-12:
                break
            tree = grow(X, np.column_stack((h, g)), crit, self.max_depth,
                        min_leaf=1, min_weight=self.min_child_weight)
            f = f + self.learning_rate * tree.predict(X)
            self.trees_.append(tree)
            self.loss_trace_.append(loss.loss(y, f))
        return self

    def decision_function(self, X):
        X = np.asarray(X, dtype=float)
        f = np.full(len(X), self.base_score_)
        for tree in self.trees_:
            f += self.learning_rate * tree.predict(X)
        return f

    def predict(self, X):
        f = self.decision_function(X)
        if self.mode == "classifier":
            return (f >= 0.0).astype(int)
        return f
