"""Selection of the SNN stability parameter and the kNN baseline k."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifier import knn_rule, snn_rule
from .core import Dataset
from .evaluation import cv_grid
from .weights import SnnParams, lambda_for_k, snn_k_star

DEFAULT_GRID_SIZE = 100
DEFAULT_TOP_FRACTION = 0.10


@dataclass(frozen=True)
class TuneGrid:
    lambdas: np.ndarray
    k_values: np.ndarray
    n: int
    d: int

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.size < 2:
            raise ValueError("tuning grid needs at least two values")
        if not (lam > 0).all() or not (np.diff(lam) > 0).all():
            raise ValueError("lambdas must be positive and strictly increasing")

    def __len__(self) -> int:
        return len(self.lambdas)


def make_snn_grid(n: int, d: int, k_min: int = 5, k_max: int | None = None, K: int = DEFAULT_GRID_SIZE) -> TuneGrid:
    """Lambdas whose k* values are ``K`` equally spaced points in ``[k_min, k_max]``.

    ``k_max`` defaults to ``n // 2``.
    """
    if k_max is None:
        k_max = n // 2
    if not 1 <= k_min < k_max <= n:
        raise ValueError(f"need 1 <= k_min < k_max <= n, got k_min={k_min}, k_max={k_max}, n={n}")
    if K < 2:
        raise ValueError("K must be at least 2")
    targets = np.linspace(k_min, k_max, K)
    lambdas = np.array([lambda_for_k(k, n, d) for k in targets])
    ks = np.array([snn_k_star(SnnParams(lam, n, d)) for lam in lambdas])
    return TuneGrid(lambdas, ks, n, d)


def knn_grid(n: int, k_min: int = 5, k_max: int | None = None, K: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Distinct integer k values from ``K`` equally spaced points in ``[k_min, n/2]``."""
    if k_max is None:
        k_max = n // 2
    if not 1 <= k_min < k_max <= n:
        raise ValueError(f"need 1 <= k_min < k_max <= n, got k_min={k_min}, k_max={k_max}, n={n}")
    return np.unique(np.rint(np.linspace(k_min, k_max, K)).astype(int))


def nearest_rank_percentile(values, pct: float) -> float:
    """Smallest value with at least ``pct`` of the sample at or below it."""
    v = np.sort(np.asarray(values, dtype=float))
    rank = max(1, math.ceil(pct * v.size))
    return float(v[rank - 1])


@dataclass(frozen=True)
class SnnTuneResult:
    lam: float
    k_star: int
    lambdas: np.ndarray
    risk: np.ndarray
    cis: np.ndarray
    accurate: np.ndarray  # boolean mask of the top-accuracy set
    threshold: float

    def table(self) -> list[dict]:
        return [
            {"lambda": float(l), "risk": float(r), "cis": float(c), "in_top_set": bool(a)}
            for l, r, c, a in zip(self.lambdas, self.risk, self.cis, self.accurate)
        ]


def select_lambda(risk, cis, top_fraction: float = DEFAULT_TOP_FRACTION) -> tuple[int, np.ndarray, float]:
    """Two-stage choice: among the most accurate candidates, the most stable.

    Returns the chosen index, the mask of the accurate set and the risk
    threshold. Candidates are assumed sorted by increasing lambda, so the
    first minimiser is the smallest lambda.
    """
    risk = np.asarray(risk, dtype=float)
    cis = np.asarray(cis, dtype=float)
    thr = nearest_rank_percentile(risk, top_fraction)
    accurate = risk < thr
    if not accurate.any():
        accurate = risk == risk.min()
    idx = np.flatnonzero(accurate)
    best = idx[np.argmin(cis[idx])]
    return int(best), accurate, thr


def tune_snn(ds: Dataset, grid: TuneGrid, seed: int, top_fraction: float = DEFAULT_TOP_FRACTION) -> SnnTuneResult:
    if grid.d != ds.d:
        raise ValueError(f"grid built for d={grid.d}, data has d={ds.d}")
    g = cv_grid(ds, [snn_rule(lam, ds.d) for lam in grid.lambdas], seed)
    risk, cis = g.risk, g.cis
    best, accurate, thr = select_lambda(risk, cis, top_fraction)
    lam = float(grid.lambdas[best])
    return SnnTuneResult(
        lam=lam,
        k_star=snn_k_star(SnnParams(lam, ds.n, ds.d)),
        lambdas=np.asarray(grid.lambdas),
        risk=risk,
        cis=cis,
        accurate=accurate,
        threshold=thr,
    )


def tune_snn_risk_only(ds: Dataset, grid: TuneGrid, seed: int) -> float:
    """Lambda minimising CV risk alone (smallest on ties)."""
    g = cv_grid(ds, [snn_rule(lam, ds.d) for lam in grid.lambdas], seed)
    return float(grid.lambdas[int(np.argmin(g.risk))])


def tune_knn(ds: Dataset, seed: int, ks=None) -> int:
    """k minimising the cross-validated risk over the default grid; ties go to smaller k."""
    if ks is None:
        ks = knn_grid(ds.n)
    ks = np.asarray(ks, dtype=int)
    g = cv_grid(ds, [knn_rule(int(k)) for k in ks], seed)
    return int(ks[int(np.argmin(g.risk))])
