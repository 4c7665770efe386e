"""Empirical risk and classification-instability (CIS) estimators.

``cv_grid`` is the workhorse behind tuning: for each of the five folds the
neighbour ordering of the two training groups is computed once and then
reused for every candidate weight rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .classifier import Procedure, WeightRule, labels_from_scores, sorted_labels
from .core import Dataset, check_labels

N_FOLDS = 5


def _pair(a, b, what: str):
    a = check_labels(np.asarray(a).ravel())
    b = check_labels(np.asarray(b).ravel())
    if a.shape != b.shape:
        raise ValueError(f"{what}: length mismatch ({a.shape[0]} vs {b.shape[0]})")
    if a.shape[0] == 0:
        raise ValueError(f"{what}: empty input")
    return a, b


def empirical_risk(preds, truth) -> float:
    """Fraction of predictions that differ from the true labels."""
    p, t = _pair(preds, truth, "empirical_risk")
    return float(np.count_nonzero(p != t) / p.shape[0])


def empirical_cis(preds1, preds2) -> float:
    """Fraction of test points on which two classifiers disagree."""
    a, b = _pair(preds1, preds2, "empirical_cis")
    return float(np.count_nonzero(a != b) / a.shape[0])


def split_halves(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random disjoint halves; the first gets ``ceil(n/2)`` points."""
    perm = rng.permutation(n)
    h = (n + 1) // 2
    return np.sort(perm[:h]), np.sort(perm[h:])


def paired_cis_estimate(procedure: Procedure, ds: Dataset, test_xs, seed: int) -> float:
    """Train ``procedure`` on two random halves of ``ds`` and return their disagreement on ``test_xs``."""
    test_xs = np.asarray(test_xs, dtype=np.float64)
    if test_xs.ndim == 1:
        test_xs = test_xs.reshape(-1, ds.d) if test_xs.size else test_xs.reshape(0, ds.d)
    if test_xs.shape[0] == 0:
        raise ValueError("test_xs is empty")
    if ds.n < 2:
        raise ValueError("need at least 2 training points to split")
    ia, ib = split_halves(ds.n, np.random.default_rng(seed))
    pa = procedure(ds.subset(ia)).predict_batch(test_xs)
    pb = procedure(ds.subset(ib)).predict_batch(test_xs)
    return empirical_cis(pa, pb)


def partition_folds(n: int, rng: np.random.Generator, n_folds: int = N_FOLDS) -> list[np.ndarray]:
    """Random partition into near-equal folds; the ``n % n_folds`` extra points go to the lowest folds."""
    perm = rng.permutation(n)
    sizes = [n // n_folds + (1 if i < n % n_folds else 0) for i in range(n_folds)]
    bounds = np.cumsum([0] + sizes)
    return [np.sort(perm[bounds[i] : bounds[i + 1]]) for i in range(n_folds)]


def _grid_scores(lab: np.ndarray, W: np.ndarray) -> np.ndarray:
    # accumulate over ranks in order, matching WnnClassifier.vote_scores bit for bit
    k = int(np.flatnonzero(W.any(axis=0))[-1]) + 1
    S = np.zeros((lab.shape[0], W.shape[0]))
    for i in range(k):
        S += lab[:, i, None] * W[None, :, i]
    return S


@dataclass(frozen=True)
class CVGrid:
    """Per-fold risk and CIS estimates; arrays have shape (K rules, 5 folds)."""

    fold_risk: np.ndarray
    fold_cis: np.ndarray

    @property
    def risk(self) -> np.ndarray:
        return self.fold_risk.sum(axis=1) / N_FOLDS

    @property
    def cis(self) -> np.ndarray:
        return self.fold_cis.sum(axis=1) / N_FOLDS


def cv_grid(ds: Dataset, rules: Sequence[WeightRule], seed: int) -> CVGrid:
    """Steps 1-3 of the two-stage tuning algorithm for a list of weight rules.

    One random 5-fold partition (from ``seed``) is shared by every rule. For
    test fold i the four remaining folds, in ascending index order, form two
    training groups: the first two folds and the last two.
    """
    if ds.n < 10:
        raise ValueError(f"dataset too small for 5-fold CIS estimation (n={ds.n}, need >= 10)")
    if not rules:
        raise ValueError("no weight rules given")
    folds = partition_folds(ds.n, np.random.default_rng(seed))
    K = len(rules)
    fold_risk = np.empty((K, N_FOLDS))
    fold_cis = np.empty((K, N_FOLDS))
    for i in range(N_FOLDS):
        rest = [folds[j] for j in range(N_FOLDS) if j != i]
        test = ds.subset(folds[i])
        preds = []
        for group in (np.concatenate(rest[:2]), np.concatenate(rest[2:])):
            train = ds.subset(np.sort(group))
            lab = sorted_labels(train, test.X)
            W = np.stack([r(train.n).w for r in rules])
            preds.append(labels_from_scores(_grid_scores(lab, W)))
        pa, pb = preds
        truth = test.y[:, None]
        m = test.n
        fold_cis[:, i] = np.count_nonzero(pa != pb, axis=0) / m
        fold_risk[:, i] = (np.count_nonzero(pa != truth, axis=0) + np.count_nonzero(pb != truth, axis=0)) / (2 * m)
    return CVGrid(fold_risk, fold_cis)


def cv_risk_cis(ds: Dataset, weight_rule_at: Callable[[float], WeightRule], lam: float, seed: int) -> tuple[float, float]:
    """Cross-validated (risk, CIS) of the weight rule ``weight_rule_at(lam)``."""
    g = cv_grid(ds, [weight_rule_at(lam)], seed)
    return float(g.risk[0]), float(g.cis[0])
