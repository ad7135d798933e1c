"""Tail mean-variance capital allocation.

Minimize ``E[W | Z > z*] + gamma Var(W | Z > z*)`` with ``W = sum_i (Y_i - p_i)^2``
over allocations ``p`` with ``sum(p) = c``. The objective is a quartic
polynomial in ``p`` whose coefficients are conditional moments of the losses
up to total order four; all of them come out of a single vector inversion.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import inversion
from .exceptions import NonConvergence, ValidationError, ZeroTailProbability
from .inversion import InversionConfig
from .riskmeasures import MIN_TAIL_PROBABILITY, SpectralPayoff, WishartProvider

MAX_ORDER = 4


@dataclass(frozen=True)
class AllocationProblem:
    """Allocation of a budget ``c`` across ``losses`` given ``conditioner > z_star``.

    Give either ``z_star`` or ``quantile_level``; the latter is resolved to the
    value at risk of the conditioner before solving.
    """

    losses: Sequence[SpectralPayoff]
    conditioner: SpectralPayoff
    budget: float
    gamma: float = 1.0
    z_star: Optional[float] = None
    quantile_level: Optional[float] = None
    t: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "losses", tuple(self.losses))
        if len(self.losses) < 2:
            raise ValidationError("at least two losses are required")
        if not self.budget > 0:
            raise ValidationError("budget must be positive")
        if self.gamma < 0:
            raise ValidationError("gamma must be nonnegative")
        if (self.z_star is None) == (self.quantile_level is None):
            raise ValidationError("give exactly one of z_star or quantile_level")


@dataclass
class MomentTable:
    """``E[prod Y_i^{k_i} | Z > z*]`` for ``sum(k) <= 4``, indexed by ``k``."""

    values: np.ndarray
    z_star: float
    tail_probability: float
    abs_error_estimate: float

    @property
    def n(self):
        return self.values.ndim

    def __getitem__(self, k):
        return self.values[tuple(k)]


@dataclass
class AllocationSolution:
    p: np.ndarray
    objective_value: float
    moment_table: MomentTable
    diagnostics: dict = field(default_factory=dict)

    @property
    def ratio(self):
        return float(self.p[0] / self.p[1])


def resolve_threshold(params, problem, cfg=None):
    if problem.z_star is not None:
        return float(problem.z_star)
    prov = WishartProvider(params, problem.conditioner.theta, problem.t)
    return float(inversion.quantile(prov, problem.quantile_level, cfg))


def conditional_moment_table(params, problem, cfg=None, z_star=None):
    """All conditional moments of the losses up to total order four."""
    cfg = InversionConfig() if cfg is None else cfg
    z = resolve_threshold(params, problem, cfg) if z_star is None else float(z_star)
    prov = WishartProvider(params, problem.conditioner.theta, problem.t,
                           [pay.theta for pay in problem.losses])
    box = (MAX_ORDER,) * len(problem.losses)
    table = inversion.truncated_moment_table(prov, 0, box, z, cfg, max_degree=MAX_ORDER)
    raw = table.values[0]
    den = raw[(0,) * raw.ndim]
    if den < MIN_TAIL_PROBABILITY:
        raise ZeroTailProbability(f"tail probability {den:.3g} is numerically zero")
    return MomentTable(values=raw / den, z_star=z, tail_probability=float(den),
                       abs_error_estimate=table.abs_error_estimate / den)


class TailMeanVariance:
    """The quartic objective with analytic gradient and Hessian.

    Parameters
    ----------
    table : MomentTable
    gamma : float
    """

    def __init__(self, table, gamma):
        self.m = np.asarray(table.values)
        self.n = self.m.ndim
        self.gamma = float(gamma)
        self._idx = [k for k in np.ndindex(*self.m.shape) if sum(k) <= MAX_ORDER]

    def shifted(self, p):
        """Moments of ``D = Y - p``: ``E[prod D_i^{k_i}]`` for ``sum(k) <= 4``."""
        out = np.zeros_like(self.m)
        for k in self._idx:
            acc = 0.0
            for j in np.ndindex(*[kk + 1 for kk in k]):
                coef = 1.0
                for ki, ji, pi in zip(k, j, p):
                    coef *= math.comb(ki, ji) * (-pi) ** (ki - ji)
                acc += coef * self.m[j]
            out[k] = acc
        return out

    def _unit(self, *pairs):
        k = [0] * self.n
        for i, e in pairs:
            k[i] += e
        return tuple(k)

    def evaluate(self, p, derivatives=True):
        p = np.asarray(p, dtype=float)
        d = self.shifted(p)
        n, g = self.n, self.gamma
        u = self._unit
        ew = sum(d[u((i, 2))] for i in range(n))
        ew2 = sum(d[u((i, 2), (l, 2))] for i in range(n) for l in range(n))
        f = ew + g * (ew2 - ew ** 2)
        if not derivatives:
            return f
        g_ew = np.array([-2 * d[u((i, 1))] for i in range(n)])
        g_ew2 = np.array([-4 * sum(d[u((i, 1), (l, 2))] for l in range(n))
                          for i in range(n)])
        h_ew = 2 * np.eye(n)
        h_ew2 = 4 * ew * np.eye(n) + 8 * np.array(
            [[d[u((i, 1), (j, 1))] for j in range(n)] for i in range(n)])
        grad = g_ew + g * (g_ew2 - 2 * ew * g_ew)
        hess = h_ew + g * (h_ew2 - 2 * np.outer(g_ew, g_ew) - 2 * ew * h_ew)
        return f, grad, hess

    def __call__(self, p):
        return self.evaluate(p, derivatives=False)


def _null_basis(n):
    # Orthonormal basis of {y : sum(y) = 0}.
    q, _ = np.linalg.qr(np.column_stack([np.ones(n), np.eye(n)[:, : n - 1]]))
    return q[:, 1:]


def _newton(obj, p0, basis, tol, max_iter=200):
    p = p0.copy()
    f, g, h = obj.evaluate(p)
    for it in range(max_iter):
        rg = basis.T @ g
        if np.linalg.norm(rg) <= tol:
            return p, f, np.linalg.norm(rg), it, True
        rh = basis.T @ h @ basis
        try:
            w = np.linalg.eigvalsh(rh)
            step = -np.linalg.solve(rh, rg) if w.min() > 0 else -rg
        except np.linalg.LinAlgError:
            step = -rg
        if step @ rg >= 0:
            step = -rg
        t = 1.0
        while t > 1e-12:
            cand = p + t * (basis @ step)
            fc = obj(cand)
            if fc <= f + 1e-4 * t * (step @ rg) or abs(fc - f) <= 1e-15 * max(1.0, abs(f)):
                break
            t *= 0.5
        p = cand
        f, g, h = obj.evaluate(p)
    rg = basis.T @ g
    return p, f, np.linalg.norm(rg), max_iter, np.linalg.norm(rg) <= tol


def closed_form_mean(table, budget):
    """Minimizer for ``gamma = 0``: ``p_i = E[Y_i | .] + (c - sum_j E[Y_j | .]) / n``."""
    n = table.n
    means = np.array([table[tuple(1 if j == i else 0 for j in range(n))] for i in range(n)])
    return means + (budget - means.sum()) / n


def solve_from_table(table, budget, gamma, starts=8, seed=0, tol=1e-10):
    """Minimize the tail mean-variance objective on ``sum(p) = budget``.

    Raises
    ------
    NonConvergence
        If no start reaches the gradient tolerance.
    """
    obj = TailMeanVariance(table, gamma)
    n = table.n
    basis = _null_basis(n)
    rng = np.random.default_rng(seed)
    inits = [closed_form_mean(table, budget)]
    for _ in range(starts):
        w = rng.dirichlet(np.ones(n))
        inits.append(budget * w)
    best = None
    for p0 in inits:
        p, f, gnorm, iters, ok = _newton(obj, p0, basis, tol)
        if not ok:
            continue
        if best is None or f < best[1] - 1e-14:
            best = (p, f, gnorm, iters)
    if best is None:
        raise NonConvergence("no multi-start reached the gradient tolerance")
    p, f, gnorm, iters = best
    # restore the budget exactly
    p = p + (budget - p.sum()) / n
    return AllocationSolution(p=p, objective_value=float(obj(p)), moment_table=table,
                              diagnostics={"reduced_gradient_norm": float(gnorm),
                                           "newton_iterations": iters,
                                           "starts": len(inits)})


def solve(params, problem, cfg=None, starts=8, seed=0):
    """Solve an :class:`AllocationProblem` for a Wishart model."""
    table = conditional_moment_table(params, problem, cfg)
    sol = solve_from_table(table, problem.budget, problem.gamma, starts, seed)
    sol.diagnostics["z_star"] = table.z_star
    sol.diagnostics["tail_probability"] = table.tail_probability
    return sol


def grid_certificate(solution, budget, gamma, step=1e-3):
    """Gap ``objective(solution) - min over a p1-grid on [0, c]`` for two losses.

    A gap at or below about 1e-8 certifies that the grid found nothing better.
    """
    table = solution.moment_table
    if table.n != 2:
        raise ValidationError("grid certificate is implemented for two losses")
    obj = TailMeanVariance(table, gamma)
    grid = np.arange(0.0, budget + step / 2, step)
    vals = np.array([obj(np.array([a, budget - a])) for a in grid])
    return float(solution.objective_value - vals.min())


def default_problem(quantile_level=0.95, budget=1.3, gamma=1.0, t=1.0):
    """Two diagonal losses conditioned on the off-diagonal entry exceeding its VaR."""
    return AllocationProblem(losses=(SpectralPayoff.loss(0), SpectralPayoff.loss(1)),
                             conditioner=SpectralPayoff.covariance(0, 1), budget=budget,
                             gamma=gamma, quantile_level=quantile_level, t=t)


__all__ = ["AllocationProblem", "AllocationSolution", "MomentTable", "TailMeanVariance",
           "conditional_moment_table", "solve", "solve_from_table", "grid_certificate",
           "closed_form_mean", "default_problem"]
