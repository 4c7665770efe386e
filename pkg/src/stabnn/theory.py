"""Asymptotic regret and CIS formulas, problem constants and limiting ratios.

Conventions
-----------
``b1``, ``b2`` are the boundary integrals driving the regret expansion and
``b3 = 4 b1 / sqrt(pi)`` the CIS constant. For a weight vector ``w``::

    regret ~ b1 * sum(w**2) + b2 * (n**(-2/d) * sum(alpha_i * w_i))**2
    cis    ~ b3 * sqrt(sum(w**2))

:func:`gaussian_constants_numeric` integrates over the decision boundary
with its natural surface measure. The standard closed form for ``b1`` in
the two-Gaussian family (:func:`gaussian_b1_closed_form`) is smaller than
that integral by a factor ``sqrt(d)``; :func:`gaussian_b1_surface` gives the
surface-measure value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import gamma, gammaln
from scipy.stats import norm, qmc

from .core import WeightVector
from .simgen import GaussianProblem
from .weights import SnnParams, alpha_coeffs, snn_k_star

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class TheoryConstants:
    b1: float
    b2: float
    b3: float
    d: int

    def __post_init__(self):
        if not self.b1 > 0:
            raise ValueError("B1 must be positive")
        if self.b2 < 0:
            raise ValueError("B2 must be nonnegative")
        if self.d < 1:
            raise ValueError("d must be positive")
        if abs(self.b3 - 4.0 * self.b1 / SQRT_PI) > 1e-9:
            raise ValueError(f"B3 must equal 4*B1/sqrt(pi) = {4 * self.b1 / SQRT_PI!r}, got {self.b3!r}")

    @classmethod
    def from_b1_b2(cls, b1: float, b2: float, d: int) -> "TheoryConstants":
        return cls(float(b1), float(b2), 4.0 * float(b1) / SQRT_PI, int(d))

    def snn_lambda(self, lam0: float = 1.0) -> float:
        """Lambda of the stabilized weights for CIS penalty ``lam0``."""
        if self.b2 <= 0:
            raise ValueError("lambda undefined for B2 = 0")
        return (self.b1 + lam0 * self.b3**2) / self.b2

    def ownn_lambda(self) -> float:
        if self.b2 <= 0:
            raise ValueError("OWNN undefined: B2 = 0")
        return self.b1 / self.b2


# reference constants of the bivariate validation problem
VALIDATION_CONSTANTS = TheoryConstants.from_b1_b2(0.1299, 10.68, 2)


# regret / CIS expansions ------------------------------------------------------


def bias_sum(w: WeightVector, d: int) -> float:
    k = w.k_support
    return float(np.dot(alpha_coeffs(k, d), w.w[:k]))


def asymptotic_regret(w: WeightVector, tc: TheoryConstants, n: int | None = None) -> float:
    n = w.n if n is None else n
    if n != w.n:
        raise ValueError(f"weight vector has length {w.n}, expected {n}")
    bias = bias_sum(w, tc.d) / n ** (2.0 / tc.d)
    return tc.b1 * w.sum_sq() + tc.b2 * bias * bias


def asymptotic_cis(w: WeightVector, tc: TheoryConstants) -> float:
    return tc.b3 * math.sqrt(w.sum_sq())


def snn_sum_sq_asymptotic(k: int, d: int) -> float:
    """Leading-order sum of squared stabilized weights with support ``k``."""
    return 2.0 * (d + 2.0) / ((d + 4.0) * k)


def snn_bias_coeff(d: int) -> float:
    """Leading-order ``sum(alpha_i w_i) / k**(2/d)`` for stabilized weights."""
    return (d + 2.0) / (d + 4.0)


def validation_curves(n: int, method: Literal["SNN", "OWNN"] = "SNN", tc: TheoryConstants = VALIDATION_CONSTANTS, lam0: float = 1.0):
    """Asymptotic (regret, CIS, k) of SNN or OWNN at sample size ``n``.

    SNN uses ``lambda = (b1 + lam0 b3**2) / b2`` and OWNN ``lambda = b1 / b2``.
    """
    m = method.upper()
    if m == "SNN":
        lam = tc.snn_lambda(lam0)
    elif m == "OWNN":
        lam = tc.ownn_lambda()
    else:
        raise ValueError(f"method must be SNN or OWNN, got {method!r}")
    d = tc.d
    k = snn_k_star(SnnParams(lam, n, d))
    s2 = snn_sum_sq_asymptotic(k, d)
    regret = tc.b1 * s2 + tc.b2 * snn_bias_coeff(d) ** 2 * (k / n) ** (4.0 / d)
    cis = tc.b3 * math.sqrt(s2)
    return regret, cis, k


# limiting ratios ---------------------------------------------------------------


def cis_ratio_ownn_knn(d: float) -> float:
    return 2.0 ** (2.0 / (d + 4)) * ((d + 2.0) / (d + 4.0)) ** ((d + 2.0) / (d + 4.0))


def cis_ratio_bnn_knn(d: float) -> float:
    return 2.0 ** (-2.0 / (d + 4)) * math.exp(gammaln(2.0 + 2.0 / d) * d / (d + 4.0))


def cis_ratio_bnn_ownn(d: float) -> float:
    return (
        2.0 ** (-4.0 / (d + 4))
        * math.exp(gammaln(2.0 + 2.0 / d) * d / (d + 4.0))
        * ((d + 4.0) / (d + 2.0)) ** ((d + 2.0) / (d + 4.0))
    )


def bnn_q_opt(n: int, d: int, b1: float, b2: float) -> float:
    """Resampling ratio minimising ``b1 q/2 + b2 Gamma(2+2/d)**2 (n q)**(-4/d)``.

    This is the leading-order regret of the geometric BNN weights.
    """
    g2 = gamma(2.0 + 2.0 / d) ** 2
    return min(1.0, (8.0 * b2 * g2 / (d * b1)) ** (d / (d + 4.0)) * n ** (-4.0 / (d + 4.0)))


def snn_ownn_ratios(tc: TheoryConstants, lam: float) -> tuple[float, float]:
    """Limiting (regret, CIS) ratios of SNN at ``lam`` over OWNN."""
    if tc.b2 <= 0:
        raise ValueError("ratios undefined for B2 = 0")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    d = tc.d
    r = tc.b1 / (lam * tc.b2)
    regret = r ** (d / (d + 4.0)) * (4.0 + d / r) / (4.0 + d)
    cis = r ** (d / (2.0 * (d + 4.0)))
    return regret, cis


def snn_ownn_ratios_lambda0(b1: float, d: int, lam0: float) -> tuple[float, float]:
    """The same ratios written through the CIS penalty ``lam0`` (B2 cancels)."""
    if not b1 > 0 or lam0 < 0:
        raise ValueError("need b1 > 0 and lam0 >= 0")
    g = 1.0 + 16.0 * b1 * lam0 / math.pi
    regret = (1.0 / g) ** (d / (d + 4.0)) * (4.0 + d * g) / (4.0 + d)
    cis = (1.0 / g) ** (d / (2.0 * (d + 4.0)))
    return regret, cis


def relative_gain(b1: float, d: int) -> float:
    """Closed form of |relative CIS reduction / relative regret increase| at ``lam0 = 1``."""
    if not b1 > 0:
        raise ValueError("b1 must be positive")
    g = 1.0 + 16.0 * b1 / math.pi
    num = -math.expm1(-d / (2.0 * d + 8.0) * math.log(g))
    den = math.expm1(4.0 / (d + 4.0) * math.log(g))
    return num / den


def relative_gain_from_ratios(b1: float, d: int, lam0: float = 1.0) -> float:
    """|relative CIS change / relative regret change| computed from the limiting ratios."""
    regret, cis = snn_ownn_ratios_lambda0(b1, d, lam0)
    return abs((cis - 1.0) / (regret - 1.0))


# closed-form constants for the two-Gaussian family ----------------------------


def gaussian_b1_closed_form(mu: float, d: int) -> float:
    """Closed-form b1 for N(0, I) vs N(mu 1_d, I) with prior 1/3."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    c = mu * d / 2.0 - math.log(2.0) / mu
    return math.sqrt(2.0 * math.pi) / (3.0 * math.pi * mu * d) * math.exp(-c * c / (2.0 * d))


def gaussian_b1_surface(mu: float, d: int) -> float:
    """Surface-measure b1 for the same family: ``sqrt(d)`` times the closed form."""
    return math.sqrt(d) * gaussian_b1_closed_form(mu, d)


# boundary integrals -----------------------------------------------------------


def ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / gamma(1.0 + d / 2.0)


def ball_second_moment(d: int) -> float:
    """Integral of ``v_j**2`` over the unit ball in R^d."""
    return ball_volume(d) / (d + 2.0)


def ball_second_moment_mc(d: int, n: int = 1_000_000, seed: int = 0) -> float:
    """Monte Carlo estimate of :func:`ball_second_moment` via uniform draws in the ball."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, d))
    r = rng.random(n) ** (1.0 / d)
    v1 = g[:, 0] / np.linalg.norm(g, axis=1) * r
    return float(ball_volume(d) * np.mean(v1 * v1))


_FD_STEP = 1e-5
# second differences lose accuracy as eps/h**2, so they use a larger step
_FD_STEP2 = 1e-4


def _gradient(f, X):
    n, d = X.shape
    G = np.empty((n, d))
    for j in range(d):
        h = _FD_STEP * np.maximum(1.0, np.abs(X[:, j]))
        Xp, Xm = X.copy(), X.copy()
        Xp[:, j] += h
        Xm[:, j] -= h
        G[:, j] = (f(Xp) - f(Xm)) / (Xp[:, j] - Xm[:, j])
    return G


def _hessian_diag(f, X, f0):
    n, d = X.shape
    H = np.empty((n, d))
    for j in range(d):
        h = _FD_STEP2 * np.maximum(1.0, np.abs(X[:, j]))
        Xp, Xm = X.copy(), X.copy()
        Xp[:, j] += h
        Xm[:, j] -= h
        hp = Xp[:, j] - X[:, j]
        H[:, j] = (f(Xp) - 2.0 * f0 + f(Xm)) / (hp * hp)
    return H


def bias_function(problem: GaussianProblem, X) -> np.ndarray:
    """The bias coefficient a(x) of the regret expansion, by finite differences."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = problem.d
    eta, fbar = problem.eta, problem.marginal_pdf
    e0, f0 = eta(X), fbar(X)
    ge, gf = _gradient(eta, X), _gradient(fbar, X)
    he = _hessian_diag(eta, X, e0)
    ad = ball_volume(d)
    c = ball_second_moment(d)
    num = c * (ge * gf + 0.5 * he * f0[:, None]).sum(axis=1)
    return num / (ad ** (1.0 + 2.0 / d) * f0 ** (1.0 + 2.0 / d))


def _boundary_integrands(problem: GaussianProblem, X, e):
    """(b1, b2) integrand per crossing point, already divided by |d eta / d e|."""
    fb = problem.marginal_pdf(X)
    ge = _gradient(problem.eta, X)
    de = np.abs(ge @ e)
    a = bias_function(problem, X)
    return np.stack([fb / (4.0 * de), fb * a * a / de], axis=1)


class _LineFamily:
    """Lines ``x = c0 + U y + s e`` crossing the boundary, clipped to the region."""

    def __init__(self, problem: GaussianProblem, direction=None, n_grid: int = 65):
        self.problem = problem
        d = problem.d
        if direction is None:
            direction = problem.class2.mean - problem.class1.mean
        e = np.asarray(direction, dtype=float)
        if np.linalg.norm(e) < 1e-12:
            e = np.eye(d)[0]
        e = e / np.linalg.norm(e)
        Q, _ = np.linalg.qr(np.column_stack([e, np.eye(d)]))
        self.e = e
        self.U = Q[:, 1:d]
        if problem.region is not None:
            lo, hi = problem.region
            self.c0 = 0.5 * (lo + hi)
            self.half_diag = 0.5 * float(np.linalg.norm(hi - lo))
        else:
            self.c0 = 0.5 * (problem.class1.mean + problem.class2.mean)
            spread = max(
                float(np.sqrt(np.linalg.eigvalsh(c).max()))
                for mix in (problem.class1, problem.class2)
                for c in mix.covs
            )
            means = np.vstack([problem.class1.means, problem.class2.means])
            self.half_diag = float(np.linalg.norm(means - self.c0, axis=1).max()) + 12.0 * spread
        self.n_grid = n_grid

    def s_range(self, base):
        """Parameter interval of each line inside the region (or a wide window)."""
        m = base.shape[0]
        if self.problem.region is None:
            return np.full(m, -self.half_diag), np.full(m, self.half_diag)
        lo, hi = self.problem.region
        s_lo = np.full(m, -np.inf)
        s_hi = np.full(m, np.inf)
        for j, ej in enumerate(self.e):
            if abs(ej) < 1e-15:
                inside = (base[:, j] >= lo[j]) & (base[:, j] <= hi[j])
                s_hi = np.where(inside, s_hi, -np.inf)
                continue
            a = (lo[j] - base[:, j]) / ej
            b = (hi[j] - base[:, j]) / ej
            s_lo = np.maximum(s_lo, np.minimum(a, b))
            s_hi = np.minimum(s_hi, np.maximum(a, b))
        return s_lo, s_hi

    def crossings(self, Y):
        """Boundary points on the lines with offsets ``Y`` (shape (m, d-1)).

        Returns ``(line_index, points)``.
        """
        base = self.c0 + Y @ self.U.T
        s_lo, s_hi = self.s_range(base)
        ok = s_hi > s_lo
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            return np.empty(0, dtype=int), np.empty((0, self.problem.d))
        t = np.linspace(0.0, 1.0, self.n_grid)
        S = s_lo[idx, None] + (s_hi[idx] - s_lo[idx])[:, None] * t[None, :]
        P = base[idx, None, :] + S[..., None] * self.e
        G = self.problem.log_odds(P.reshape(-1, self.problem.d)).reshape(S.shape)
        sign = np.sign(G)
        line, seg = np.nonzero(sign[:, :-1] * sign[:, 1:] < 0)
        zl, zs = np.nonzero(sign == 0)
        a = S[line, seg]
        b = S[line, seg + 1]
        ga = G[line, seg]
        bpts = base[idx[line]]
        for _ in range(64):
            mid = 0.5 * (a + b)
            gm = self.problem.log_odds(bpts + mid[:, None] * self.e)
            left = np.sign(gm) == np.sign(ga)
            a = np.where(left, mid, a)
            ga = np.where(left, gm, ga)
            b = np.where(left, b, mid)
        s_star = np.concatenate([0.5 * (a + b), S[zl, zs]])
        lines = np.concatenate([idx[line], idx[zl]])
        pts = base[lines] + s_star[:, None] * self.e
        return lines, pts

    def integrand(self, Y):
        """Summed (b1, b2) integrand over the crossings of each line in ``Y``."""
        lines, pts = self.crossings(Y)
        out = np.zeros((Y.shape[0], 2))
        if lines.size:
            np.add.at(out, lines, _boundary_integrands(self.problem, pts, self.e))
        return out

    def crossing_count(self, Y):
        lines, _ = self.crossings(Y)
        return np.bincount(lines, minlength=Y.shape[0])


def _gauss_legendre(f, a: float, b: float, rtol: float = 1e-9, max_panels: int = 4096):
    """Composite Gauss-Legendre with vectorized ``f``, doubling panels until converged."""
    x, w = np.polynomial.legendre.leggauss(16)
    prev = None
    panels = 16
    while True:
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * np.diff(edges)
        nodes = (edges[:-1] + half)[:, None] + half[:, None] * x[None, :]
        vals = f(nodes.ravel()).reshape(panels, 16, -1)
        est = np.einsum("pkc,k,p->c", vals, w, half)
        if prev is not None and np.all(np.abs(est - prev) <= rtol * np.abs(est).max()):
            return est
        if panels >= max_panels:
            return est
        prev = est
        panels *= 2


def _integrate_1d(fam: _LineFamily, n_scan: int = 801):
    """Quadrature over the scalar offset, split where crossings enter or leave the region."""
    r = fam.half_diag
    ys = np.linspace(-r, r, n_scan)
    counts = fam.crossing_count(ys[:, None])
    if not counts.any():
        return None
    edges = [-r]
    for i in np.flatnonzero(np.diff(counts) != 0):
        lo, hi = ys[i], ys[i + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if fam.crossing_count(np.array([[mid]]))[0] == counts[i]:
                lo = mid
            else:
                hi = mid
        edges.append(0.5 * (lo + hi))
    edges.append(r)
    total = np.zeros(2)
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a or fam.crossing_count(np.array([[0.5 * (a + b)]]))[0] == 0:
            continue
        total += _gauss_legendre(lambda y: fam.integrand(y[:, None]), a, b)
    return total


def _integrate_mc(fam: _LineFamily, n_mc: int, seed: int, chunk: int = 1 << 14):
    """Defensive-mixture importance sampling over the (d-1)-dimensional offsets.

    Half the scrambled-Sobol points go to a Gaussian around the region centre,
    half to the cube circumscribing the region; the mixture density keeps the
    weights bounded where the integrand grows towards the region boundary.
    """
    k = fam.problem.d - 1
    r = fam.half_diag
    sigma = r / 3.0
    sob = qmc.Sobol(k + 1, scramble=True, seed=seed)
    m = 1 << int(math.ceil(math.log2(max(n_mc, 2))))
    total = np.zeros(2)
    log_unif = -k * math.log(2.0 * r)
    done = 0
    while done < m:
        u = sob.random(min(chunk, m - done))
        done += u.shape[0]
        gauss = u[:, 0] < 0.5
        z = np.clip(u[:, 1:], 1e-12, 1 - 1e-12)
        Y = np.where(gauss[:, None], sigma * norm.ppf(z), r * (2.0 * z - 1.0))
        in_cube = (np.abs(Y) <= r).all(axis=1)
        log_g = -0.5 * (Y / sigma) ** 2
        log_g = log_g.sum(axis=1) - k * (math.log(sigma) + 0.5 * math.log(2 * math.pi))
        q = 0.5 * np.exp(log_g) + 0.5 * np.where(in_cube, math.exp(log_unif), 0.0)
        total += (fam.integrand(Y) / q[:, None]).sum(axis=0)
    return total / m


def boundary_integrals(problem: GaussianProblem, n_mc: int = 1_000_000, seed: int = 0, direction=None):
    """(b1, b2) as surface integrals over the decision boundary within the region."""
    fam = _LineFamily(problem, direction)
    d = problem.d
    if d == 1:
        vals = fam.integrand(np.zeros((1, 0)))[0]
        if not fam.crossing_count(np.zeros((1, 0)))[0]:
            vals = None
    elif d == 2:
        vals = _integrate_1d(fam)
    else:
        vals = _integrate_mc(fam, n_mc, seed)
        if not vals[0] > 0:
            vals = None
    if vals is None:
        raise ValueError("decision boundary outside region")
    return float(vals[0]), float(vals[1])


def gaussian_constants_numeric(problem: GaussianProblem, n_mc: int = 1_000_000, seed: int = 0, direction=None) -> TheoryConstants:
    """B1, B2 (and B3) of a Gaussian-mixture problem by integration over its decision boundary.

    d = 1 sums over boundary points, d = 2 uses composite Gauss-Legendre quadrature along the
    boundary curve, d > 2 uses quasi-Monte Carlo with ``n_mc`` lines.
    """
    b1, b2 = boundary_integrals(problem, n_mc=n_mc, seed=seed, direction=direction)
    return TheoryConstants.from_b1_b2(b1, max(b2, 0.0), problem.d)
