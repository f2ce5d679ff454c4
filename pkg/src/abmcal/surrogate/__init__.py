"""Learned stand-ins for the ABM objective.

Classifier surrogates predict the KS label of a candidate, regressor
surrogates predict its KS statistic. Inputs are mapped to the unit box
before any model sees them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..ks import NEGATIVE, POSITIVE
from ..params import ParameterSpace
from .boosting import GradientBoostedTrees
from .svm import SupportVectorMachine
from .tree import DecisionTree

CLASSIFIER = "classifier"
REGRESSOR = "regressor"

DECISION_TREE = "DecisionTree"
GRADIENT_BOOSTED_TREES = "GradientBoostedTrees"
SUPPORT_VECTOR_MACHINE = "SupportVectorMachine"
FAMILIES = (DECISION_TREE, GRADIENT_BOOSTED_TREES, SUPPORT_VECTOR_MACHINE)

_ALIASES = {
    "dt": DECISION_TREE, "decisiontree": DECISION_TREE, "tree": DECISION_TREE,
    "gbt": GRADIENT_BOOSTED_TREES, "xgboost": GRADIENT_BOOSTED_TREES,
    "gradientboostedtrees": GRADIENT_BOOSTED_TREES,
    "svm": SUPPORT_VECTOR_MACHINE, "supportvectormachine": SUPPORT_VECTOR_MACHINE,
}


class InsufficientData(ValueError):
    pass


class ModeError(TypeError):
    pass


def family_name(name: str) -> str:
    if name in FAMILIES:
        return name
    try:
        return _ALIASES[name.lower().replace("_", "").replace("-", "")]
    except KeyError:
        raise ValueError(f"unknown surrogate family {name!r}") from None


@dataclass
class TrainingSet:
    inputs: np.ndarray
    labels: list
    targets: np.ndarray
    space: ParameterSpace | None = None

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.labels = list(self.labels)
        self.targets = np.asarray(self.targets, dtype=float)
        if not len(self.inputs) == len(self.labels) == len(self.targets):
            raise ValueError("inputs, labels and targets must have equal length")

    def __len__(self):
        return len(self.inputs)

    def subset(self, idx) -> "TrainingSet":
        idx = np.asarray(idx, dtype=int)
        return TrainingSet(self.inputs[idx], [self.labels[i] for i in idx],
                           self.targets[idx], self.space)

    @property
    def y01(self) -> np.ndarray:
        return np.array([lab == POSITIVE for lab in self.labels], dtype=int)


def _make(family, mode, seed):
    if family == DECISION_TREE:
        return DecisionTree(mode, max_depth=8, min_leaf=5)
    if family == GRADIENT_BOOSTED_TREES:
        return GradientBoostedTrees(mode, n_estimators=100, max_depth=4, learning_rate=0.1)
    return SupportVectorMachine(mode, C=1.0, epsilon=1e-3)


@dataclass
class Surrogate:
    family: str
    mode: str
    model: object
    space: ParameterSpace | None = None
    validation_score: float = float("nan")
    n_train: int = 0

    def _features(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.space.to_unit(X) if self.space is not None else X

    def labels(self, X) -> list[str]:
        if self.mode != CLASSIFIER:
            raise ModeError("label prediction needs a classifier surrogate")
        raw = self.model.predict(self._features(X))
        return [POSITIVE if r else NEGATIVE for r in raw]

    def values(self, X) -> np.ndarray:
        if self.mode != REGRESSOR:
            raise ModeError("value prediction needs a regressor surrogate")
        return np.clip(self.model.predict(self._features(X)), 0.0, 1.0)

    def score(self, X, labels, targets) -> float:
        """F1 for classifiers, RMSE for regressors, on the given rows."""
        if self.mode == CLASSIFIER:
            return f1_score(self.labels(X), labels)
        return rmse(self.values(X), targets)


def fit(family: str, mode: str, data: TrainingSet, seed: int = 0) -> Surrogate:
    family = family_name(family)
    if mode not in (CLASSIFIER, REGRESSOR):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == CLASSIFIER:
        y = data.y01
        if len(set(y.tolist())) < 2:
            raise InsufficientData("classifier training needs both labels present")
    else:
        if len(data) < 2:
            raise InsufficientData("regressor training needs at least two rows")
        y = data.targets
    X = data.space.to_unit(data.inputs) if data.space is not None else data.inputs
    model = _make(family, mode, seed).fit(X, y)
    return Surrogate(family, mode, model, data.space, n_train=len(data))


def predict_label(s: Surrogate, v) -> str:
    return s.labels(np.atleast_2d(v))[0]


def predict_value(s: Surrogate, v) -> float:
    return float(s.values(np.atleast_2d(v))[0])


def f1_score(predicted: Sequence[str], truth: Sequence[str]) -> float:
    if len(predicted) != len(truth):
        raise ValueError("predicted and truth must have equal length")
    p = np.array([x == POSITIVE for x in predicted])
    t = np.array([x == POSITIVE for x in truth])
    tp = np.sum(p & t)
    fp = np.sum(p & ~t)
    fn = np.sum(~p & t)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return float(2 * precision * recall / (precision + recall))


def rmse(predicted, truth) -> float:
    predicted = np.asarray(predicted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if predicted.shape != truth.shape:
        raise ValueError("predicted and truth must have equal length")
    if predicted.size == 0:
        raise ValueError("rmse of an empty batch")
    return float(np.sqrt(np.mean((truth - predicted) ** 2)))


def folds(data: TrainingSet, k: int, mode: str, seed: int = 0) -> list[np.ndarray]:
    """Test-index arrays for k folds, stratified by label for classifiers."""
    n = len(data)
    if k < 2 or n < k:
        raise InsufficientData(f"need at least k={k} >= 2 rows, have {n}")
    rng = np.random.default_rng(seed)
    assign = np.empty(n, dtype=int)
    if mode == CLASSIFIER:
        y = data.y01
        start = 0
        for cls in (1, 0):
            idx = rng.permutation(np.flatnonzero(y == cls))
            assign[idx] = (start + np.arange(len(idx))) % k
            start += len(idx)
    else:
        assign[rng.permutation(n)] = np.arange(n) % k
    return [np.flatnonzero(assign == f) for f in range(k)]


def cross_validate(family, mode, data: TrainingSet, k: int = 3, seed: int = 0) -> float:
    """Mean held-out F1 (classifier) or RMSE (regressor) over k folds."""
    if mode == CLASSIFIER and len(set(data.y01.tolist())) < 2:
        raise InsufficientData("cross-validation needs both labels present")
    scores = []
    for test in folds(data, k, mode, seed):
        train = np.setdiff1d(np.arange(len(data)), test)
        held = data.subset(test)
        try:
            model = fit(family, mode, data.subset(train), seed)
        except InsufficientData:
            # a training fold holding one label: a constant predictor of that label
            only = data.subset(train).labels[0]
            scores.append(f1_score([only] * len(held), held.labels))
            continue
        scores.append(model.score(held.inputs, held.labels, held.targets))
    return float(np.mean(scores))


def select_classifier(data: TrainingSet, k: int = 3, seed: int = 0,
                      families: Sequence[str] = FAMILIES) -> Surrogate:
    """Fit every family, keep the one with the best cross-validated F1."""
    best = None
    for fam in families:
        score = cross_validate(fam, CLASSIFIER, data, k, seed)
        if best is None or score > best[0]:
            best = (score, fam)
    model = fit(best[1], CLASSIFIER, data, seed)
    model.validation_score = best[0]
    return model


__all__ = [
    "CLASSIFIER", "REGRESSOR", "FAMILIES", "DECISION_TREE", "GRADIENT_BOOSTED_TREES",
    "SUPPORT_VECTOR_MACHINE", "TrainingSet", "Surrogate", "InsufficientData", "ModeError",
    "fit", "predict_label", "predict_value", "f1_score", "rmse", "cross_validate",
    "select_classifier", "family_name", "folds",
]
