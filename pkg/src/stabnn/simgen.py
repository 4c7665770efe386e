"""Gaussian-mixture classification problems with exact Bayes oracles."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import expit, logsumexp

from .core import Dataset

_LOG2PI = math.log(2.0 * math.pi)

# mean shift giving the same boundary constant at each dimension in Simulation 1
SIM1_MU = {1: 2.076, 2: 1.205, 4: 0.659, 8: 0.314, 10: 0.208}
SIM23_DIMS = (2, 5)
SIM23_PRIORS = (1 / 2, 1 / 3)


def _ro(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False)
    _logdet: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        covs = np.asarray(self.covs, dtype=float)
        if covs.ndim == 2:
            covs = covs[None]
        c, d = means.shape
        if w.shape != (c,) or covs.shape != (c, d, d):
            raise ValueError("mixture weights, means and covariances have inconsistent shapes")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        if not np.allclose(covs, np.transpose(covs, (0, 2, 1))):
            raise ValueError("covariances must be symmetric")
        try:
            chol = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError:
            raise ValueError("covariances must be positive definite") from None
        logdet = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
        for name, val in (("weights", w), ("means", means), ("covs", covs), ("_chol", chol), ("_logdet", logdet)):
            object.__setattr__(self, name, _ro(val))

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def logpdf(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        parts = []
        for wc, m, L, ld in zip(self.weights, self.means, self._chol, self._logdet):
            z = solve_triangular(L, (X - m).T, lower=True)
            lw = math.log(wc) if wc > 0 else -np.inf
            parts.append(lw - 0.5 * (z * z).sum(axis=0) - 0.5 * ld - 0.5 * self.d * _LOG2PI)
        return logsumexp(np.stack(parts), axis=0)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        comp = rng.choice(len(self.weights), size=n, p=self.weights)
        z = rng.standard_normal((n, self.d))
        return self.means[comp] + np.einsum("nij,nj->ni", self._chol[comp], z)

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "means": self.means.tolist(), "covs": self.covs.tolist()}

    @classmethod
    def from_dict(cls, dct) -> "GaussianMixture":
        return cls(dct["weights"], dct["means"], dct["covs"])


def gaussian(mean, cov) -> GaussianMixture:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    return GaussianMixture([1.0], mean[None], np.asarray(cov, dtype=float)[None])


@dataclass(frozen=True, eq=False)
class GaussianProblem:
    """Two-class problem: class densities, prior of class 1 and an optional box region.

    The region only bounds boundary integrals; sampling is never truncated.
    """

    class1: GaussianMixture
    class2: GaussianMixture
    prior1: float
    region: Optional[tuple[np.ndarray, np.ndarray]] = None
    name: str = "custom"

    def __post_init__(self):
        if self.class1.d != self.class2.d:
            raise ValueError("class densities have different dimensions")
        if not 0.0 <= self.prior1 <= 1.0:
            raise ValueError("prior1 must lie in [0, 1]")
        if self.region is not None:
            lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), (self.d,)) for b in self.region)
            if not (lo < hi).all():
                raise ValueError("region lower corner must lie below the upper corner")
            object.__setattr__(self, "region", (_ro(lo), _ro(hi)))

    @property
    def d(self) -> int:
        return self.class1.d

    def log_odds(self, X) -> np.ndarray:
        """``log(pi1 f1) - log((1 - pi1) f2)``; positive where class 1 is more likely."""
        with np.errstate(divide="ignore"):
            return (np.log(self.prior1) + self.class1.logpdf(X)) - (np.log1p(-self.prior1) + self.class2.logpdf(X))

    def log_marginal(self, X) -> np.ndarray:
        with np.errstate(divide="ignore"):
            a = np.log(self.prior1) + self.class1.logpdf(X)
            b = np.log1p(-self.prior1) + self.class2.logpdf(X)
        return np.logaddexp(a, b)

    def marginal_pdf(self, X) -> np.ndarray:
        return np.exp(self.log_marginal(X))

    def eta(self, X) -> np.ndarray:
        return expit(self.log_odds(X))

    def swapped(self) -> "GaussianProblem":
        return GaussianProblem(self.class2, self.class1, 1.0 - self.prior1, self.region, self.name + "-swapped")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "prior1": self.prior1,
            "class1": self.class1.to_dict(),
            "class2": self.class2.to_dict(),
            "region": None if self.region is None else [self.region[0].tolist(), self.region[1].tolist()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, dct) -> "GaussianProblem":
        region = dct.get("region")
        return cls(
            GaussianMixture.from_dict(dct["class1"]),
            GaussianMixture.from_dict(dct["class2"]),
            float(dct["prior1"]),
            None if region is None else (np.asarray(region[0]), np.asarray(region[1])),
            dct.get("name", "custom"),
        )


def sample(problem: GaussianProblem, n: int, seed) -> Dataset:
    """Draw ``n`` labelled points: label 1 with probability ``prior1``, then features from that class."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    y = np.where(rng.random(n) < problem.prior1, 1, 2)
    X = np.empty((n, problem.d))
    for label, mix in ((1, problem.class1), (2, problem.class2)):
        idx = np.flatnonzero(y == label)
        if idx.size:
            X[idx] = mix.sample(idx.size, rng)
    return Dataset(X, y)


def eta(problem: GaussianProblem, x):
    """P(Y = 1 | X = x); scalar for a single point, array for a batch."""
    x = np.asarray(x, dtype=float)
    out = problem.eta(x.reshape(-1, problem.d))
    return float(out[0]) if x.ndim <= 1 and problem.d == x.size else out


def bayes_predict(problem: GaussianProblem, x):
    e = eta(problem, x)
    if np.ndim(e) == 0:
        return 2 if e < 0.5 else 1
    return np.where(e < 0.5, 2, 1).astype(np.int8)


def bayes_risk_mc(problem: GaussianProblem, n_mc: int, seed, chunk: int = 200_000) -> float:
    """Monte Carlo Bayes risk, averaging ``min(eta, 1 - eta)`` over draws from the marginal."""
    if n_mc < 1:
        raise ValueError("n_mc must be positive")
    rng = np.random.default_rng(seed)
    total = 0.0
    done = 0
    while done < n_mc:
        m = min(chunk, n_mc - done)
        X = sample(problem, m, rng).X
        e = problem.eta(X)
        total += float(np.minimum(e, 1.0 - e).sum())
        done += m
    return total / n_mc


def _box_around(*means, pad: float = 2.0):
    pts = np.vstack(means)
    return (np.full(pts.shape[1], pts.min() - pad), np.full(pts.shape[1], pts.max() + pad))


def toeplitz_cov(d: int, rho: float = 0.6) -> np.ndarray:
    idx = np.arange(d)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def validation_problem() -> GaussianProblem:
    d = 2
    return GaussianProblem(
        gaussian(np.zeros(d), np.eye(d)),
        gaussian(np.ones(d), np.eye(d)),
        1 / 3,
        (np.full(d, -2.0), np.full(d, 3.0)),
        "validation",
    )


def make_simulation(sim_id, d: int | None = None, prior: float | None = None) -> GaussianProblem:
    """Problem for ``sim_id`` in {"validation", 1, 2, 3}.

    Simulation 1 takes ``d`` in {1, 2, 4, 8, 10} (prior fixed at 1/3).
    Simulations 2 and 3 take ``d`` in {2, 5} and ``prior`` in {1/2, 1/3}.
    Regions are the box spanning all component means padded by 2.
    """
    valid = "valid combinations: validation; 1 with d in {1,2,4,8,10}; 2 or 3 with d in {2,5} and prior in {1/2,1/3}"
    if sim_id in ("validation", "val", 0):
        if d not in (None, 2) or prior not in (None, 1 / 3):
            raise ValueError(f"validation problem is fixed at d=2, prior=1/3; {valid}")
        return validation_problem()
    try:
        sid = int(sim_id)
    except (TypeError, ValueError):
        raise ValueError(f"unknown simulation {sim_id!r}; {valid}") from None
    if sid == 1:
        if d not in SIM1_MU or prior not in (None, 1 / 3):
            raise ValueError(f"unsupported Simulation 1 setting d={d}, prior={prior}; {valid}")
        mu = SIM1_MU[d]
        m1, m2 = np.zeros(d), np.full(d, mu)
        return GaussianProblem(gaussian(m1, np.eye(d)), gaussian(m2, np.eye(d)), 1 / 3, _box_around(m1, m2), f"sim1-d{d}")
    if sid in (2, 3):
        if prior is None:
            prior = 1 / 2
        if d not in SIM23_DIMS or not any(math.isclose(prior, p) for p in SIM23_PRIORS):
            raise ValueError(f"unsupported Simulation {sid} setting d={d}, prior={prior}; {valid}")
        sigma = np.eye(d) if sid == 2 else toeplitz_cov(d)
        ones = np.ones(d)
        p1 = GaussianMixture([0.5, 0.5], [0 * ones, 3 * ones], [sigma, 2 * sigma])
        p2 = GaussianMixture([0.5, 0.5], [1.5 * ones, 4.5 * ones], [sigma, 2 * sigma])
        tag = "1/2" if math.isclose(prior, 0.5) else "1/3"
        region = _box_around(p1.means, p2.means)
        return GaussianProblem(p1, p2, prior, region, f"sim{sid}-d{d}-pi{tag}")
    raise ValueError(f"unknown simulation {sim_id!r}; {valid}")


def problem_settings(sim_id) -> list[dict]:
    """Every (d, prior) setting of a simulation family."""
    sid = int(sim_id)
    if sid == 1:
        return [{"d": d} for d in SIM1_MU]
    return [{"d": d, "prior": p} for d in SIM23_DIMS for p in SIM23_PRIORS]
