"""Monte Carlo oracle for Wishart and matrix gamma laws.

Used only to verify the analytic routes. For integer ``beta`` in the Bru case
the process is a sum of ``beta`` outer products of vector Ornstein-Uhlenbeck
factors ``dv = m v dt + sigma dW``, which can be sampled exactly.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .exceptions import EmptyTail, ValidationError
from .riskmeasures import TailQuery, TwoDates

SCHEMES = ("exact", "euler")
CHUNK = 100_000


@dataclass(frozen=True)
class SimConfig:
    """Sampling settings.

    ``exact`` requires the Bru case with integer ``beta``; ``euler`` works for
    any admissible parameters but carries discretization bias.
    """

    paths: int = 1_000_000
    dt: float = 1e-4
    seed: int = 0
    scheme: str = "exact"
    workers: Optional[int] = None

    def __post_init__(self):
        if self.paths < 1:
            raise ValidationError("paths must be >= 1")
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if self.scheme not in SCHEMES:
            raise ValidationError(f"scheme must be one of {SCHEMES}")


def _chunks(paths, seed):
    sizes = [CHUNK] * (paths // CHUNK)
    if paths % CHUNK:
        sizes.append(paths % CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    return [(size, np.random.default_rng(s)) for size, s in zip(sizes, seqs)]


def _run(cfg, fn):
    # Fixed chunk sizes and per-chunk streams make results independent of workers.
    jobs = _chunks(cfg.paths, cfg.seed)
    if cfg.workers and cfg.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            parts = list(ex.map(lambda job: fn(*job), jobs))
    else:
        parts = [fn(*job) for job in jobs]
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p) for p in zip(*parts))
    return np.concatenate(parts)


def _integer_beta(params):
    if not params.is_bru:
        raise ValidationError("the exact scheme needs the Bru case omega = beta sigma^2")
    beta = params.beta
    if abs(beta - round(beta)) > 1e-12:
        raise ValidationError(f"the exact scheme needs an integer beta, got {beta}")
    return int(round(beta))


def _initial_factors(x0, k):
    # Columns v with sum v v^T = x0; the surplus factors start at zero.
    w, u = np.linalg.eigh(x0)
    v = u * np.sqrt(np.clip(w, 0, None))
    out = np.zeros((k, x0.shape[0]))
    out[: x0.shape[0]] = v.T
    return out


def _outer_sum(v):
    return np.einsum("pki,pkj->pij", v, v)


def _propagate(params, v, tau, rng):
    e = params.expm_m(tau)
    chol = np.linalg.cholesky(params.varsigma(tau))
    z = rng.standard_normal(v.shape)
    return v @ e.T + z @ chol.T


def sample_xt(params, t, cfg=None, t1=None):
    """Draws of ``x_t``; with ``t1`` also the joint draws of ``x_{t1}``.

    Returns
    -------
    ndarray of shape (paths, n, n), or a pair of them when ``t1`` is given.
    """
    cfg = SimConfig() if cfg is None else cfg
    if t1 is not None and not t1 > t:
        raise ValidationError("t1 must exceed t")
    if cfg.scheme == "euler":
        return _run(cfg, lambda size, rng: _euler_chunk(params, t, t1, cfg.dt, size, rng))
    k = _integer_beta(params)
    v0 = _initial_factors(np.asarray(params.x0), k)

    def chunk(size, rng):
        v = _propagate(params, np.broadcast_to(v0, (size,) + v0.shape), t, rng)
        if t1 is None:
            return _outer_sum(v)
        x_t = _outer_sum(v)
        return x_t, _outer_sum(_propagate(params, v, t1 - t, rng))

    return _run(cfg, chunk)


def _sqrt_psd(x):
    w, u = np.linalg.eigh(x)
    return (u * np.sqrt(np.clip(w, 0, None))[..., None, :]) @ np.swapaxes(u, -1, -2)


def _euler_steps(params, x, steps, dt, rng, record=False):
    m, sig, om = params.m, params.sigma, params.omega_matrix
    n = x.shape[-1]
    qv = np.zeros(x.shape[:1] + (n * n, n * n)) if record else None
    for _ in range(steps):
        root = _sqrt_psd(x)
        dw = rng.standard_normal(x.shape) * np.sqrt(dt)
        noise = root @ dw @ sig
        noise = noise + np.swapaxes(noise, -1, -2)
        dx = (om + m @ x + x @ m.T) * dt + noise
        if record:
            flat = dx.reshape(len(x), -1)
            qv += flat[:, :, None] * flat[:, None, :]
        x = x + dx
    return (x, qv) if record else x


def _euler_chunk(params, t, t1, dt, size, rng):
    x0 = np.broadcast_to(np.asarray(params.x0), (size,) + params.x0.shape).copy()
    steps = max(1, int(round(t / dt)))
    x = _euler_steps(params, x0, steps, t / steps, rng)
    if t1 is None:
        return x
    steps1 = max(1, int(round((t1 - t) / dt)))
    return x, _euler_steps(params, x.copy(), steps1, (t1 - t) / steps1, rng)


def realized_covariation(params, x=None, horizon=0.01, dt=1e-4, paths=2000, seed=0):
    """Realized quadratic covariation rates of Euler increments started at ``x``.

    Returns
    -------
    dict
        Same keys as :func:`wishrisk.wishart.quadratic_covariations`.
    """
    x = np.asarray(params.x0 if x is None else x, dtype=float)
    rng = np.random.default_rng(seed)
    steps = max(1, int(round(horizon / dt)))
    start = np.broadcast_to(x, (paths,) + x.shape).copy()
    _, qv = _euler_steps(params, start, steps, dt, rng, record=True)
    rate = qv.mean(axis=0) / (steps * dt)
    n = x.shape[0]
    idx = lambda i, j: i * n + j  # noqa: E731
    return {"x11,x11": rate[idx(0, 0), idx(0, 0)], "x22,x22": rate[idx(1, 1), idx(1, 1)],
            "x12,x12": rate[idx(0, 1), idx(0, 1)], "x11,x22": rate[idx(0, 0), idx(1, 1)]}


def sample_stationary(beta, varsigma_inf, size, seed=0):
    """Matrix gamma draws: Wishart with ``beta`` degrees of freedom and scale ``varsigma_inf``."""
    vs = np.asarray(varsigma_inf, dtype=float)
    draws = stats.wishart(df=beta, scale=vs).rvs(size=size, random_state=np.random.default_rng(seed))
    return np.asarray(draws).reshape(size, *vs.shape)


def _payoff(theta, x):
    return np.einsum("ij,pji->p", theta, x)


def estimate_conditional_moment(draws, query):
    """Ratio estimator of a :class:`TailQuery` with a delta-method standard error.

    Parameters
    ----------
    draws : ndarray or pair of ndarrays
        ``x_t`` draws, or ``(x_t0, x_t1)`` for two-date queries.
    query : TailQuery

    Returns
    -------
    estimate, standard_error : float

    Raises
    ------
    EmptyTail
        If no draw exceeds the threshold.
    """
    if not isinstance(query, TailQuery):
        raise ValidationError("query must be a TailQuery")
    if isinstance(query.dates, TwoDates):
        if not isinstance(draws, tuple):
            raise ValidationError("two-date queries need (x_t0, x_t1) draws")
        x_cond, x_target = draws
    else:
        x_cond = x_target = draws[0] if isinstance(draws, tuple) else draws
    hit = _payoff(query.conditioner.theta, x_cond) > query.threshold
    count = int(hit.sum())
    if count == 0:
        raise EmptyTail(f"no draw exceeds {query.threshold:g}")
    g = np.ones(count)
    sel = x_target[hit]
    for pay, order in query.targets:
        if order:
            g = g * _payoff(pay.theta, sel) ** order
    est = float(g.mean())
    n = len(hit)
    prob = count / n
    # delta method for mean(g 1) / mean(1)
    resid = np.zeros(n)
    resid[hit] = g - est
    se = float(np.sqrt(np.mean(resid ** 2) / n) / prob)
    return est, se


def dump_draws(path, draws):
    """Write draws as whitespace-separated columns ``xij`` for ``i <= j``."""
    x = np.asarray(draws)
    n = x.shape[-1]
    iu = np.triu_indices(n)
    header = " ".join(f"x{i + 1}{j + 1}" for i, j in zip(*iu))
    np.savetxt(path, x[:, iu[0], iu[1]], header=header, comments="", fmt="%.10g")


__all__ = ["SimConfig", "EmptyTail", "sample_xt", "sample_stationary",
           "realized_covariation", "estimate_conditional_moment", "dump_draws"]
