"""Random Wishart configurations and an independent first-derivative oracle."""

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

from wishrisk import WishartParams


def random_config(rng):
    """Bru-case parameters, a date, a base argument inside the domain and a direction."""
    m = -np.diag(rng.uniform(0.05, 0.8, 2)) + 0.05 * rng.normal(size=(2, 2))
    c = rng.normal(size=(2, 2)) * 0.2
    sigma = c @ c.T + 0.05 * np.eye(2)
    beta = rng.uniform(3.0, 8.0)
    params = WishartParams(m=m, sigma=sigma, beta=beta)
    t = rng.uniform(0.2, 3.0)
    th = rng.normal(size=(2, 2))
    theta1 = 0.5 * (th + th.T)
    th = rng.normal(size=(2, 2))
    theta0 = 0.5 * (th + th.T)
    vs = varsigma_quad(params, t)
    top = np.linalg.eigvalsh(vs).max()
    theta0 *= 0.1 / (top * np.abs(np.linalg.eigvalsh(theta0)).max())
    theta1 *= 0.1 / (top * np.abs(np.linalg.eigvalsh(theta1)).max())
    return params, t, theta0, theta1


def varsigma_quad(params, t):
    """``int_0^t e^{sm} sigma^2 e^{s m^T} ds`` via the Lyapunov identity."""
    s2 = params.sigma @ params.sigma
    e = expm(t * params.m)
    # m V + V m^T = e s2 e^T - s2
    return solve_continuous_lyapunov(params.m, e @ s2 @ e.T - s2)


def mgf_and_first_derivative(params, t, theta0, theta1):
    """``Phi(theta0)`` and ``d/dnu Phi(theta0 + nu theta1)`` at 0 (Bru case)."""
    vs = varsigma_quad(params, t)
    e = expm(t * params.m)
    n = len(vs)
    big_m = np.eye(n) - 2 * theta0 @ vs
    big_n = np.eye(n) - 2 * vs @ theta0
    a = e.T @ np.linalg.solve(big_m, theta0) @ e
    b = -0.5 * params.beta * np.log(np.linalg.det(big_m))
    phi = np.exp(np.trace(a @ params.x0) + b)
    da = e.T @ np.linalg.solve(big_m, theta1) @ np.linalg.inv(big_n) @ e
    db = params.beta * np.trace(np.linalg.solve(big_m, theta1) @ vs)
    return phi, phi * (np.trace(da @ params.x0) + db)


def mean(params, t):
    e = expm(t * params.m)
    return e @ params.x0 @ e.T + params.beta * varsigma_quad(params, t)
