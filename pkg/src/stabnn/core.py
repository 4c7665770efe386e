"""Shared data model: labels, datasets, weight vectors and evaluation reports.

Labels are the integers 1 and 2. Feature matrices are stored as read-only
float64 arrays so that datasets and weight vectors can be shared freely
between worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

LABELS = (1, 2)
WEIGHT_SUM_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def check_label(value) -> int:
    """Return ``value`` as an int after checking it is a valid class label."""
    iv = int(value)
    if iv != value or iv not in LABELS:
        raise ValueError(f"class label must be 1 or 2, got {value!r}")
    return iv


def check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.size and not np.isin(y, LABELS).all():
        bad = y[~np.isin(y, LABELS)][0]
        raise ValueError(f"class label must be 1 or 2, got {bad!r}")
    return y.astype(np.int8)


@dataclass(frozen=True)
class LabeledSample:
    x: np.ndarray
    y: int

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64).ravel()
        if not np.isfinite(x).all():
            raise ValueError("sample features must be finite")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", check_label(self.y))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labelled training corpus.

    Parameters
    ----------
    X : array of shape (n, d)
        Feature matrix, all entries finite.
    y : array of shape (n,)
        Labels in {1, 2}.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ValueError("feature matrix must be two-dimensional")
        y = check_labels(np.asarray(self.y).ravel())
        if X.shape[0] == 0:
            raise ValueError("empty dataset")
        if X.shape[1] == 0:
            raise ValueError("dimension d must be positive")
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if not np.isfinite(X).all():
            raise ValueError("dataset features must be finite")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))

    @classmethod
    def from_samples(cls, samples: Iterable[LabeledSample]) -> "Dataset":
        samples = list(samples)
        if not samples:
            raise ValueError("empty dataset")
        dims = {s.x.shape[0] for s in samples}
        if len(dims) != 1:
            raise ValueError(f"mixed sample dimensions {sorted(dims)}")
        return cls(np.stack([s.x for s in samples]), np.array([s.y for s in samples]))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i) -> LabeledSample:
        return LabeledSample(self.X[i], int(self.y[i]))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx])

    @property
    def samples(self) -> list[LabeledSample]:
        return [self[i] for i in range(self.n)]


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Nonnegative neighbour weights summing to one, indexed by neighbour rank."""

    w: np.ndarray
    k_support: int = field(init=False)

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64).ravel()
        if w.size == 0:
            raise ValueError("weight vector must be nonempty")
        if not np.isfinite(w).all():
            raise ValueError("weights must be finite")
        if (w < 0).any():
            raise ValueError(f"negative weight {w[w < 0][0]!r}")
        s = w.sum()
        if abs(s - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {s!r}, not 1")
        pos = np.flatnonzero(w > 0)
        object.__setattr__(self, "w", _frozen(w))
        object.__setattr__(self, "k_support", int(pos[-1]) + 1)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def __len__(self) -> int:
        return self.n

    def sum_sq(self) -> float:
        return float(np.dot(self.w, self.w))


@dataclass(frozen=True)
class EvalReport:
    risk: float
    cis: float
    n_test: int
    n_replications: int
    std_error_risk: float = 0.0
    std_error_cis: float = 0.0

    def __post_init__(self):
        for name in ("risk", "cis"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.std_error_risk < 0 or self.std_error_cis < 0:
            raise ValueError("standard errors must be nonnegative")

    @classmethod
    def from_replications(cls, risks: Sequence[float], ciss: Sequence[float], n_test: int) -> "EvalReport":
        risks = np.asarray(risks, dtype=float)
        ciss = np.asarray(ciss, dtype=float)
        r = len(risks)
        return cls(
            risk=float(risks.mean()),
            cis=float(ciss.mean()),
            n_test=int(n_test),
            n_replications=r,
            std_error_risk=std_error(risks),
            std_error_cis=std_error(ciss),
        )


def std_error(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / np.sqrt(values.size))


def majority_class(ds: Dataset | Sequence[int]) -> int:
    """More frequent label of ``ds``; a tie goes to class 1."""
    y = ds.y if isinstance(ds, Dataset) else check_labels(ds)
    if len(y) == 0:
        raise ValueError("empty dataset")
    n1 = int(np.count_nonzero(y == 1))
    return 2 if n1 < len(y) - n1 else 1
