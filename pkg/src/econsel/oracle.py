"""Independent numerical evaluation of g-prior evidence.

The slopes and intercept are integrated analytically through dense Gaussian
algebra on the ``n x n`` marginal covariance of y; the error variance is
integrated by adaptive quadrature. Nothing here reuses the R^2 closed form,
so it serves as a cross-check of :mod:`econsel.gprior`.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate


def quadrature_log_evidence(y, X, g: float) -> float:
    """``log m(y | X)`` under a flat intercept, g-prior slopes and ``p(s2) ∝ 1/s2``."""
    y = np.asarray(y, dtype=float)
    n = y.size
    X = np.asarray(X, dtype=float).reshape(n, -1)
    if X.shape[1]:
        hat = X @ np.linalg.solve(X.T @ X, X.T)
    else:
        hat = np.zeros((n, n))
    # y | b0, s2 ~ N(b0 1, s2 * cov) after integrating the slopes
    cov = np.eye(n) + g * hat
    _, logdet = np.linalg.slogdet(cov)
    ones = np.ones(n)
    ci_1 = np.linalg.solve(cov, ones)
    ci_y = np.linalg.solve(cov, y)
    one_ci_one = ones @ ci_1
    Q = y @ ci_y - (ones @ ci_y) ** 2 / one_ci_one

    a = (n - 1) / 2.0

    # integrate over u = log s2
    def log_integrand(u):
        return -a * u - 0.5 * Q * math.exp(-u)

    u_mode = math.log(Q / (2 * a))
    peak = log_integrand(u_mode)
    width = 1.0 / math.sqrt(a)
    lo, hi = u_mode - 12 * width - 5, u_mode + 60 * width + 5
    value, _ = integrate.quad(lambda u: math.exp(log_integrand(u) - peak), lo, hi,
                              points=[u_mode], epsabs=1e-14, epsrel=1e-13, limit=400)
    return (-a * math.log(2 * math.pi) - 0.5 * logdet - 0.5 * math.log(one_ci_one)
            + peak + math.log(value))


def quadrature_log_bayes_factor(y, X, g: float) -> float:
    """Log Bayes factor of the model using all columns of X against intercept-only."""
    y = np.asarray(y, dtype=float)
    return quadrature_log_evidence(y, X, g) - quadrature_log_evidence(y, np.zeros((y.size, 0)), g)


def toy_problem(seed: int):
    """Small standardized regression problem: returns (y, X, n, k)."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 21))
    k = int(rng.integers(1, 4))
    X = rng.standard_normal((n, k))
    X = (X - X.mean(axis=0)) / X.std(axis=0, ddof=1)
    y = 1.0 + X @ rng.uniform(-1, 1, k) + rng.standard_normal(n)
    return y, X, n, k
