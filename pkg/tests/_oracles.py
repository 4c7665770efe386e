"""Independent reference computations shared by the theory and acceptance tests."""

import math

import numpy as np
from scipy import integrate
from scipy.optimize import minimize_scalar
from scipy.special import gamma

from stabnn import theory
from stabnn.weights import knn_k_opt, ownn_weights

# large B1/B2 keeps every support size in the thousands, so flooring is negligible
ORACLE_N = 10**7
ORACLE_B1, ORACLE_B2 = 100.0, 1.0


def bnn_oracle(d, n=ORACLE_N, b1=ORACLE_B1, b2=ORACLE_B2):
    """Regret-optimal resampling ratio found numerically; returns (q, sum of squared weights)."""
    q0 = theory.bnn_q_opt(n, d, b1, b2)
    lo, hi = math.log(q0) - 1.0, math.log(q0) + 1.0
    m = int(min(n, math.ceil(40.0 / math.exp(lo))))
    i = np.arange(1, m + 1, dtype=float)
    p = 1 + 2 / d
    a = i**p - (i - 1) ** p

    def sums(q):
        mm = int(min(m, math.ceil(40.0 / q)))
        w = q * np.exp(math.log1p(-q) * (i[:mm] - 1)) / -math.expm1(n * math.log1p(-q))
        return w @ w, a[:mm] @ w

    def regret(z):
        s2, sa = sums(math.exp(z))
        return b1 * s2 + b2 * (sa / n ** (2 / d)) ** 2

    res = minimize_scalar(regret, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
    q = math.exp(res.x)
    return q, float(sums(q)[0])


def cis_ratios_oracle(d, n=ORACLE_N, b1=ORACLE_B1, b2=ORACLE_B2):
    """(OWNN/kNN, BNN/kNN, BNN/OWNN) CIS ratios from explicit weight vectors."""
    knn2 = 1.0 / knn_k_opt(n, d, b1, b2)
    own2 = ownn_weights(n, d, b1, b2).sum_sq()
    _, bnn2 = bnn_oracle(d, n, b1, b2)
    return math.sqrt(own2 / knn2), math.sqrt(bnn2 / knn2), math.sqrt(bnn2 / own2)


def _phi(x):
    x = np.asarray(x, dtype=float)
    return math.exp(-0.5 * float(x @ x)) / (2 * math.pi) ** (len(x) / 2)


def two_gaussian_segment_constants(mu=1.0, d=2, lo=-2.0, hi=3.0):
    """B1, B2 for N(0, I) vs N(mu 1, I), prior 1/3, d = 2, on the box [lo, hi]^2.

    Uses analytic derivatives of eta and the marginal density along the
    straight boundary segment, integrated with adaptive quadrature.
    """
    assert d == 2
    m = np.full(d, mu)
    c = mu * d / 2 - math.log(2) / mu
    base = np.full(d, c / d)
    u = np.array([1.0, -1.0]) / math.sqrt(2)
    s_lo = math.sqrt(2) * max(lo - c / 2, c / 2 - hi)
    s_hi = math.sqrt(2) * min(hi - c / 2, c / 2 - lo)
    ad = math.pi ** (d / 2) / gamma(1 + d / 2)
    cj = ad / (d + 2)

    def parts(s):
        x = base + s * u
        g = 2 * math.exp(m @ x - m @ m / 2)
        f1, f2 = _phi(x), _phi(x - m)
        fbar = f1 / 3 + 2 * f2 / 3
        eta_j = -g * m / (1 + g) ** 2
        eta_jj = -(m**2) * g * (1 - g) / (1 + g) ** 3
        fbar_j = -x * f1 / 3 - (x - m) * 2 * f2 / 3
        a = cj * np.sum(eta_j * fbar_j + 0.5 * eta_jj * fbar) / (ad ** (1 + 2 / d) * fbar ** (1 + 2 / d))
        grad = np.linalg.norm(eta_j)
        return fbar, grad, a

    b1 = integrate.quad(lambda s: (lambda f, g, a: f / (4 * g))(*parts(s)), s_lo, s_hi, epsabs=0, epsrel=1e-11)[0]
    b2 = integrate.quad(lambda s: (lambda f, g, a: f * a * a / g)(*parts(s)), s_lo, s_hi, epsabs=0, epsrel=1e-11, limit=200)[0]
    return b1, b2
