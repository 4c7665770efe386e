"""Weight vectors for the nearest-neighbour family: kNN, BNN, OWNN and SNN.

Every generator returns a :class:`~stabnn.core.WeightVector` of length ``n``
whose i-th entry is the weight placed on the i-th nearest training point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import WeightVector


@dataclass(frozen=True)
class SnnParams:
    lam: float
    n: int
    d: int

    def __post_init__(self):
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise ValueError(f"lambda must be positive and finite, got {self.lam}")
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")


@dataclass(frozen=True)
class BnnParams:
    q: float
    n: int

    def __post_init__(self):
        if not 0 < self.q <= 1:
            raise ValueError(f"resampling ratio q must lie in (0, 1], got {self.q}")
        if self.n < 1:
            raise ValueError("n must be positive")


def alpha_coeffs(k: int, d: int) -> np.ndarray:
    """Vector of ``i**(1+2/d) - (i-1)**(1+2/d)`` for ``i = 1..k``.

    Evaluated as ``-i**p * expm1(p * log1p(-1/i))`` to avoid cancellation
    between two large powers.
    """
    if d < 1:
        raise ValueError("d must be positive")
    p = 1.0 + 2.0 / d
    i = np.arange(1, k + 1, dtype=np.float64)
    out = np.empty(k)
    if k:
        out[0] = 1.0
    ii = i[1:]
    out[1:] = -(ii**p) * np.expm1(p * np.log1p(-1.0 / ii))
    return out


def alpha_coeff(i: int, d: int) -> float:
    if i < 1:
        raise ValueError("rank i must be >= 1")
    if i == 1:
        return 1.0
    p = 1.0 + 2.0 / d
    return float(-(i**p) * math.expm1(p * math.log1p(-1.0 / i)))


def _floor(x: float) -> int:
    # absorbs round-off when x is an exact integer obtained by inverting the formula
    return int(math.floor(x * (1.0 + 1e-12)))


def snn_k_star_raw(lam: float, n: int, d: int) -> float:
    e = d / (d + 4.0)
    return (d * (d + 4.0) / (2.0 * (d + 2.0))) ** e * lam**e * n ** (4.0 / (d + 4.0))


def snn_k_star(p: SnnParams) -> int:
    """Support size of the stabilized weights, clamped to ``[1, n]``."""
    return min(max(_floor(snn_k_star_raw(p.lam, p.n, p.d)), 1), p.n)


def lambda_for_k(k: float, n: int, d: int) -> float:
    """Inverse of :func:`snn_k_star_raw`: the lambda whose unfloored k* equals ``k``."""
    return 2.0 * (d + 2.0) / (d * (d + 4.0)) * k ** ((d + 4.0) / d) / n ** (4.0 / d)


def snn_weights(p: SnnParams) -> WeightVector:
    k = snn_k_star(p)
    d = p.d
    a = alpha_coeffs(k, d)
    head = (1.0 + d / 2.0 - d / (2.0 * k ** (2.0 / d)) * a) / k
    np.clip(head, 0.0, None, out=head)
    w = np.zeros(p.n)
    w[:k] = head / head.sum()
    return WeightVector(w)


def knn_weights(k: int, n: int) -> WeightVector:
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    w = np.zeros(n)
    w[:k] = 1.0 / k
    return WeightVector(w)


def bnn_weights(p: BnnParams) -> WeightVector:
    """Geometric weights ``q (1-q)**(i-1) / (1 - (1-q)**n)`` of the bagged 1-NN."""
    q, n = p.q, p.n
    if q == 1.0:
        w = np.zeros(n)
        w[0] = 1.0
        return WeightVector(w)
    lq = math.log1p(-q)
    w = q * np.exp(lq * np.arange(n, dtype=np.float64)) / -math.expm1(n * lq)
    # closed-form normalisation is exact only up to rounding
    return WeightVector(w / w.sum())


def knn_k_opt(n: int, d: int, b1: float, b2: float) -> int:
    """Regret-minimising k for kNN, from minimising ``b1/k + b2 (k/n)**(4/d)``."""
    if b2 <= 0:
        raise ValueError("k_opt undefined for B2 <= 0")
    e = d / (d + 4.0)
    return max(_floor((d * b1 / (4.0 * b2)) ** e * n ** (4.0 / (d + 4.0))), 1)


def ownn_k_from_knn(k_opt: int, d: int) -> int:
    """Map the optimal kNN k to the OWNN support size."""
    return max(_floor((2.0 * (d + 4.0) / (d + 2.0)) ** (d / (d + 4.0)) * k_opt), 1)


def ownn_weights(n: int, d: int, b1: float, b2: float) -> WeightVector:
    """OWNN weights: the stabilized weights at ``lambda = b1 / b2``."""
    if b2 == 0:
        raise ValueError("OWNN undefined: B2 = 0")
    if b1 <= 0 or b2 < 0:
        raise ValueError("B1 must be positive and B2 nonnegative")
    return snn_weights(SnnParams(b1 / b2, n, d))
