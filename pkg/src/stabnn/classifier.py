"""Weighted nearest-neighbour prediction.

A :class:`WnnClassifier` stores a training set and a weight vector. For a
query x the training points are ranked by Euclidean distance (ties by
original index), and the vote score ``S(x) = sum_i w_i 1{Y_(i) = 1}`` is
thresholded: class 2 iff ``S(x) < 1/2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from . import _kernels
from .core import Dataset, WeightVector
from .weights import BnnParams, SnnParams, bnn_weights, knn_weights, snn_weights

# A weight rule maps a training-set size to the weight vector used at that size.
WeightRule = Callable[[int], WeightVector]


class Classifier(Protocol):
    def predict_batch(self, xs) -> np.ndarray: ...


Procedure = Callable[[Dataset], Classifier]


def _as_query(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != d:
        raise ValueError(f"query has dimension {x.shape[0]}, training data has {d}")
    return x


def _as_queries(xs, d: int) -> np.ndarray:
    if isinstance(xs, np.ndarray) and xs.ndim == 2:
        if xs.shape[0] and xs.shape[1] != d:
            raise ValueError(f"query 0 has dimension {xs.shape[1]}, training data has {d}")
        return np.ascontiguousarray(xs, dtype=np.float64)
    rows = []
    for i, x in enumerate(xs):
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.shape[0] != d:
            raise ValueError(f"query {i} has dimension {x.shape[0]}, training data has {d}")
        rows.append(x)
    if not rows:
        return np.empty((0, d))
    return np.stack(rows)


def neighbor_order(train: Dataset, x) -> np.ndarray:
    """Training indices sorted by distance to ``x``; equal distances by index."""
    q = _as_query(x, train.d)[None, :]
    return _kernels.neighbor_order(np.ascontiguousarray(train.X), q)[0]


def sorted_labels(train: Dataset, xs) -> np.ndarray:
    """Indicator matrix of class-1 labels, one row per query, columns in neighbour order."""
    q = _as_queries(xs, train.d)
    is1 = (train.y == 1).astype(np.float64)
    return _kernels.sorted_labels(np.ascontiguousarray(train.X), is1, q)


def labels_from_scores(scores) -> np.ndarray:
    return np.where(np.asarray(scores) < 0.5, 2, 1).astype(np.int8)


@dataclass(frozen=True, eq=False)
class WnnClassifier:
    train: Dataset
    weights: WeightVector

    def __post_init__(self):
        if self.weights.n != self.train.n:
            raise ValueError(f"weight vector has length {self.weights.n}, training set has {self.train.n} points")

    @classmethod
    def fit(cls, train: Dataset, rule: WeightRule) -> "WnnClassifier":
        return cls(train, rule(train.n))

    def vote_scores(self, xs) -> np.ndarray:
        q = _as_queries(xs, self.train.d)
        if q.shape[0] == 0:
            return np.empty(0)
        is1 = (self.train.y == 1).astype(np.float64)
        return _kernels.vote_scores(np.ascontiguousarray(self.train.X), is1, q, self.weights.w)

    def vote_score(self, x) -> float:
        q = _as_query(x, self.train.d)
        return float(self.vote_scores(q[None, :])[0])

    def predict(self, x) -> int:
        return 2 if self.vote_score(x) < 0.5 else 1

    def predict_batch(self, xs) -> np.ndarray:
        return labels_from_scores(self.vote_scores(xs))


def vote_score(c: WnnClassifier, x) -> float:
    return c.vote_score(x)


def predict(c: WnnClassifier, x) -> int:
    return c.predict(x)


def predict_batch(c: WnnClassifier, xs) -> np.ndarray:
    return c.predict_batch(xs)


# weight rules ---------------------------------------------------------------


def knn_rule(k: int) -> WeightRule:
    """kNN with ``k`` clamped to the training-set size."""
    return lambda n: knn_weights(min(k, n), n)


def bnn_rule(q: float) -> WeightRule:
    return lambda n: bnn_weights(BnnParams(q, n))


def snn_rule(lam: float, d: int) -> WeightRule:
    return lambda n: snn_weights(SnnParams(lam, n, d))


def ownn_rule(b1: float, b2: float, d: int) -> WeightRule:
    if b2 == 0:
        raise ValueError("OWNN undefined: B2 = 0")
    return snn_rule(b1 / b2, d)


def wnn(rule: WeightRule) -> Procedure:
    """Turn a weight rule into a fitting procedure."""
    return lambda ds: WnnClassifier.fit(ds, rule)


@dataclass(frozen=True)
class ConstantClassifier:
    label: int = 1

    def predict_batch(self, xs) -> np.ndarray:
        return np.full(len(xs), self.label, dtype=np.int8)


def constant(label: int = 1) -> Procedure:
    """Procedure that ignores its training data and always predicts ``label``."""
    return lambda ds: ConstantClassifier(label)
