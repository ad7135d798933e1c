"""Wishart process model: parameters, exponentially affine MGF and its jets.

The process solves ``dx = (omega + m x + x m^T) dt + sqrt(x) dW sigma + sigma dW^T sqrt(x)``.
For a symmetric (possibly complex) ``theta``

    E[exp(tr[theta x_t])] = exp(tr[a(t, theta) x0] + b(t, theta)),
    a(t, theta) = e^{t m^T} (I - 2 theta vs_t)^{-1} theta e^{t m},

with ``vs_t`` the integrated conditional covariance. In the Bru case
``omega = beta sigma^2`` the scalar exponent is ``-beta/2 log det(I - 2 vs_t theta)``;
otherwise it is the time integral of ``tr[omega a(u, theta)]``.

Every MGF routine accepts a batch of ``theta`` matrices (shape ``(..., n, n)``)
so that inversion contours are evaluated in a single call.
"""

import threading
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import matcore, quadrature
from .exceptions import DomainError, ValidationError
from .jet import Jet, matmul

#: Condition number beyond which I - 2 theta vs_t is treated as singular.
COND_LIMIT = 1e12

_CACHE_LOCK = threading.Lock()


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WishartParams:
    """Wishart model parameters.

    Exactly one of ``beta`` (Bru case, ``omega = beta sigma^2``) or ``omega``
    must be given. ``x0=None`` starts the process at its stationary mean.
    """

    m: np.ndarray
    sigma: np.ndarray
    x0: Optional[np.ndarray] = None
    beta: Optional[float] = None
    omega: Optional[np.ndarray] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"m must be square, got shape {m.shape}")
        n = m.shape[0]
        matcore.check_stable(m)
        sigma = matcore.as_symmetric(self.sigma, "sigma")
        if sigma.shape != (n, n):
            raise ValidationError("sigma and m dimensions differ")
        if not matcore.is_positive_definite(sigma):
            raise ValidationError("sigma must be positive definite")
        s2 = sigma @ sigma
        if (self.beta is None) == (self.omega is None):
            raise ValidationError("give exactly one of beta (Bru case) or omega")
        if self.beta is not None:
            beta = float(self.beta)
            if not np.isfinite(beta) or beta < n + 1:
                raise ValidationError(
                    f"Bru case requires beta >= n + 1 = {n + 1}, got beta = {beta}")
            object.__setattr__(self, "beta", beta)
            omega = beta * s2
        else:
            omega = matcore.as_symmetric(self.omega, "omega")
            gap = np.linalg.eigvalsh(omega - (n + 1) * s2)
            if gap.min() < -1e-12 * max(1.0, np.abs(omega).max()):
                raise ValidationError(
                    "omega - (n + 1) sigma^2 must be positive semidefinite")
            object.__setattr__(self, "omega", _frozen(omega))
        if self.x0 is None:
            x0 = matcore.lyapunov_solve(m, omega)
        else:
            x0 = matcore.as_symmetric(self.x0, "x0")
            if x0.shape != (n, n):
                raise ValidationError("x0 and m dimensions differ")
        if not matcore.is_positive_definite(x0):
            raise ValidationError("x0 must be positive definite")
        object.__setattr__(self, "m", _frozen(m))
        object.__setattr__(self, "sigma", _frozen(sigma))
        object.__setattr__(self, "x0", _frozen(x0))

    @property
    def n(self):
        return self.m.shape[0]

    @property
    def is_bru(self):
        return self.beta is not None

    @property
    def sigma2(self):
        return self.sigma @ self.sigma

    @property
    def omega_matrix(self):
        return self.beta * self.sigma2 if self.is_bru else self.omega

    def _cached(self, key, build):
        with _CACHE_LOCK:
            hit = self._cache.get(key)
        if hit is None:
            hit = build()
            hit.setflags(write=False)
            with _CACHE_LOCK:
                hit = self._cache.setdefault(key, hit)
        return hit

    def varsigma(self, t):
        """Integrated conditional covariance at horizon ``t`` (cached)."""
        t = float(t)
        return self._cached(("vs", t), lambda: matcore.varsigma(t, self.m, self.sigma))

    def expm_m(self, t):
        t = float(t)
        return self._cached(("em", t), lambda: matcore.expm(t * self.m))

    @property
    def varsigma_inf(self):
        """Limit of ``varsigma(t)``: solves ``m X + X m^T = -sigma^2``."""
        return self._cached(("vsinf",), lambda: matcore.lyapunov_solve(self.m, self.sigma2))

    def mean(self, t):
        """``E[x_t]``."""
        e = self.expm_m(t)
        drift = e @ self.x0 @ e.T
        if self.is_bru:
            return matcore.symmetrize(drift + self.beta * self.varsigma(t))
        return matcore.symmetrize(drift + _integrate_omega_mean(self, t))

    def with_sigma(self, sigma, recompute_x0=True):
        """Copy with a new ``sigma``; ``x0`` is re-solved from the Lyapunov equation."""
        x0 = None if recompute_x0 else self.x0
        return replace(self, sigma=sigma, x0=x0, _cache={})

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_cache"] = {}
        return state

    def __setstate__(self, state):
        for k, v in state.items():
            object.__setattr__(self, k, v)


def example_params(rho=0.5, beta=4.0):
    """Two-loss reference model: ``m = diag(-0.01, -0.02)``, sigma with correlation ``rho``.

    ``x0`` is the stationary mean, the solution of ``-beta sigma^2 = m X + X m^T``.
    """
    s12 = rho * np.sqrt(0.06 * 0.04)
    sigma = np.array([[0.06, s12], [s12, 0.04]])
    return WishartParams(m=np.diag([-0.01, -0.02]), sigma=sigma, beta=beta)


def _integrate_omega_mean(params, t):
    # E[x_t] drift from omega: int_0^t e^{um} omega e^{um^T} du.
    n = params.n
    big = matcore.kron_sum(params.m)
    rhs = (matcore.expm(t * big) - np.eye(n * n)) @ matcore.vec(params.omega_matrix)
    return matcore.unvec(matcore.solve(big, rhs), n)


@dataclass
class MgfValue:
    """MGF value with its affine exponents; ``value = exp(tr[a x0] + b)``."""

    value: np.ndarray
    a: np.ndarray
    b: np.ndarray
    domain_margin: np.ndarray


# ---------------------------------------------------------------------------
# core


def _const(x):
    return x.value if isinstance(x, Jet) else x


def domain_margin(params, t, theta):
    """``lambda_min(I - 2 S Re(theta) S)`` with ``S = vs_t^{1/2}``; positive inside the domain."""
    vs = params.varsigma(t)
    w, v = np.linalg.eigh(vs)
    s = (v * np.sqrt(np.clip(w, 0, None))) @ v.T
    re = np.real(np.asarray(theta))
    mat = np.eye(params.n) - 2 * s @ re @ s
    return np.linalg.eigvalsh(matcore.symmetrize(mat))[..., 0]


def _check_domain(params, t, theta0, where="t"):
    margin = domain_margin(params, t, theta0)
    if np.any(margin <= 0):
        raise DomainError(
            f"MGF argument outside the domain at horizon {where}={t:g} "
            f"(domain margin {np.min(margin):.3g})")
    mat = np.eye(params.n) - 2 * np.asarray(theta0) @ params.varsigma(t)
    c = matcore.cond(mat)
    if np.any(~np.isfinite(c)) or np.any(c >= COND_LIMIT):
        raise DomainError(
            f"I - 2 theta varsigma is numerically singular at horizon {where}={t:g}")
    return margin


def _b_general(params, t, theta):
    """``int_0^t tr[omega a(u, theta)] du`` by adaptive Gauss-Kronrod."""
    omega = params.omega_matrix
    is_jet = isinstance(theta, Jet)
    template = theta.coeffs if is_jet else np.asarray(theta)
    out_shape = template.shape[:-2]

    def integrand(us):
        rows = []
        for u in us:
            if u <= 0:
                val = np.trace(matmul(omega, theta).coeffs if is_jet
                               else omega @ theta, axis1=-2, axis2=-1)
            else:
                a, _ = _affine_a(params, u, theta)
                coeffs = matmul(omega, a).coeffs if is_jet else omega @ a
                val = np.trace(coeffs, axis1=-2, axis2=-1)
            rows.append(np.asarray(val, dtype=complex).reshape(-1))
        return np.array(rows)

    res = quadrature.integrate(integrand, [0.0, float(t)], tol=1e-12, rel_tol=1e-13)
    vals = res.value.reshape(out_shape)
    return Jet(vals, theta.orders, theta.max_degree) if is_jet else vals


def _affine_a(params, t, theta):
    """``a(t, theta)`` and ``M = I - 2 theta vs_t`` for an array or jet ``theta``."""
    n = params.n
    vs = params.varsigma(t)
    e = params.expm_m(t)
    mat = np.eye(n) - 2 * matmul(theta, vs)
    minv = mat.inv() if isinstance(mat, Jet) else matcore.inv(mat)
    a = matmul(e.T, matmul(matmul(minv, theta), e))
    return a, mat


def log_affine(params, t, theta, check=True, where="t"):
    """Return ``(a, b, margin)`` for ``theta`` (array batch or :class:`Jet`)."""
    theta0 = _const(theta)
    margin = _check_domain(params, t, theta0, where) if check else None
    if t == 0:
        n = params.n
        zero_b = np.zeros(np.shape(theta0)[:-2], dtype=complex)
        if isinstance(theta, Jet):
            return theta, Jet.constant(zero_b, theta.orders, theta.max_degree), margin
        return np.asarray(theta, dtype=complex), zero_b, margin
    a, mat = _affine_a(params, t, theta)
    if params.is_bru:
        # det(I - 2 theta vs) == det(I - 2 vs theta)
        if isinstance(mat, Jet):
            b = mat.logdet() * (-0.5 * params.beta)
        else:
            b = -0.5 * params.beta * matcore.logdet(mat)
    else:
        b = _b_general(params, t, theta)
    return a, b, margin


def _exponent(params, a, b):
    if isinstance(a, Jet):
        return matmul(a, params.x0).trace() + b
    return np.trace(a @ params.x0, axis1=-2, axis2=-1) + b


def mgf(params, t, theta):
    """MGF of ``tr[theta x_t]``-type payoffs at one date.

    Parameters
    ----------
    params : WishartParams
    t : float
        Horizon, ``t >= 0``.
    theta : array_like
        Symmetric, possibly complex, matrix or batch ``(..., n, n)``.

    Returns
    -------
    MgfValue

    Raises
    ------
    DomainError
        If ``I - 2 theta vs_t`` leaves the domain or is numerically singular.
    """
    theta = np.asarray(theta, dtype=complex)
    a, b, margin = log_affine(params, float(t), theta)
    value = np.exp(_exponent(params, a, b))
    return MgfValue(value=value, a=a, b=b, domain_margin=margin)


def mgf_jet(params, t, theta0, theta1, order, max_degree=None):
    """Taylor jet of ``nu -> Phi(t, theta0 + sum_k nu_k theta1_k)`` at ``nu = 0``.

    Parameters
    ----------
    theta0 : array_like
        Base argument, matrix or batch ``(..., n, n)``.
    theta1 : array_like or sequence of array_like
        One direction, or a list of directions.
    order : int or tuple of int
        Truncation order per direction.
    max_degree : int, optional
        Cap on the total degree of retained coefficients.

    Returns
    -------
    Jet
        ``derivative(q)`` gives the mixed derivative of order ``q``.
    """
    dirs, orders = _directions(theta1, order)
    theta0 = np.asarray(theta0, dtype=complex)
    th = Jet.linear(theta0, dirs, orders, max_degree)
    a, b, _ = log_affine(params, float(t), th)
    return _exponent(params, a, b).exp()


def _directions(theta1, order):
    arr = np.asarray(theta1) if not isinstance(theta1, (list, tuple)) else None
    if arr is not None and arr.ndim == 2:
        dirs = [arr]
    else:
        dirs = [np.asarray(d) for d in theta1]
    orders = (int(order),) * len(dirs) if np.ndim(order) == 0 else tuple(order)
    if len(orders) != len(dirs):
        raise ValidationError("one order per direction is required")
    if sum(orders) > 12:
        raise ValidationError("total jet order above 12 is not supported")
    return dirs, orders


TWO_DATE_CONVENTIONS = ("tower", "as_printed")


def _two_date_exponent(params, t0, t1, theta_bar0, theta_t1, convention):
    if not 0 < t0 < t1:
        raise ValidationError("two-date MGF requires 0 < t0 < t1")
    if convention not in TWO_DATE_CONVENTIONS:
        raise ValidationError(f"unknown two-date convention {convention!r}")
    tau = float(t1 - t0)
    a1, b1, _ = log_affine(params, tau, theta_t1, where="t1 - t0")
    inner = theta_bar0 + a1
    a0, b0, margin = log_affine(params, float(t0), inner, where="t0")
    if convention == "as_printed":
        _, b0, _ = log_affine(params, float(t0), theta_bar0, where="t0")
    return a0, b0 + b1, margin


def mgf_two_dates(params, t0, t1, theta_bar0, theta_t1, convention="tower"):
    """Joint MGF ``E[exp(tr[theta_bar0 x_t0] + tr[theta_t1 x_t1])]``.

    ``convention="tower"`` (default) is the law of iterated expectations,
    ``b(t0, theta_bar0 + a(t1 - t0, theta_t1))``. ``"as_printed"`` instead uses
    ``b(t0, theta_bar0)``, a variant kept for reproducing legacy tables; it is
    not a valid MGF when ``theta_t1 != 0``.
    """
    theta_bar0 = np.asarray(theta_bar0, dtype=complex)
    theta_t1 = np.asarray(theta_t1, dtype=complex)
    theta_bar0, theta_t1 = np.broadcast_arrays(theta_bar0, theta_t1)
    a, b, margin = _two_date_exponent(params, t0, t1, theta_bar0, theta_t1, convention)
    value = np.exp(_exponent(params, a, b))
    return MgfValue(value=value, a=a, b=b, domain_margin=margin)


def mgf_two_dates_jet(params, t0, t1, theta_bar0, theta_a, theta_b=None,
                      orders=(1, 1), convention="tower", max_degree=None):
    """Jet of ``(nu0, nu1) -> Phi(t0, t1, theta_bar0, nu0 theta_a + nu1 theta_b)``.

    ``theta_a`` may also be a list of directions (then ``theta_b`` is omitted and
    ``orders`` has one entry per direction). All directions act at ``t1``.
    """
    if theta_b is None:
        dirs, ords = _directions(theta_a, orders)
    else:
        dirs, ords = [np.asarray(theta_a), np.asarray(theta_b)], tuple(orders)
    theta_bar0 = np.asarray(theta_bar0, dtype=complex)
    n = params.n
    zero = np.zeros(theta_bar0.shape[:-2] + (n, n), dtype=complex)
    th1 = Jet.linear(zero, dirs, ords, max_degree)
    bar0 = Jet.constant(theta_bar0, ords, max_degree)
    a, b, _ = _two_date_exponent(params, t0, t1, bar0, th1, convention)
    return _exponent(params, a, b).exp()


def stationary_mgf(beta, varsigma_inf, theta):
    """Matrix-gamma MGF ``det(I - 2 vs_inf theta)^{-beta/2}`` (batched over ``theta``)."""
    vs = np.asarray(varsigma_inf, dtype=float)
    theta = np.asarray(theta, dtype=complex)
    mat = np.eye(vs.shape[0]) - 2 * vs @ theta
    c = matcore.cond(mat)
    if np.any(~np.isfinite(c)) or np.any(c >= COND_LIMIT):
        raise DomainError("I - 2 varsigma_inf theta is numerically singular")
    w, v = np.linalg.eigh(vs)
    s = (v * np.sqrt(np.clip(w, 0, None))) @ v.T
    margin = np.linalg.eigvalsh(matcore.symmetrize(
        np.eye(vs.shape[0]) - 2 * s @ theta.real @ s))[..., 0]
    if np.any(margin <= 0):
        raise DomainError("matrix-gamma MGF argument outside the domain")
    return np.exp(-0.5 * beta * matcore.logdet(mat))


def stationary_mgf_jet(beta, varsigma_inf, theta0, theta1, order, max_degree=None):
    """Jet of the matrix-gamma MGF along one or more directions."""
    dirs, orders = _directions(theta1, order)
    vs = np.asarray(varsigma_inf, dtype=float)
    theta0 = np.asarray(theta0, dtype=complex)
    stationary_mgf(beta, vs, theta0)  # domain check
    th = Jet.linear(theta0, dirs, orders, max_degree)
    mat = np.eye(vs.shape[0]) - 2 * matmul(vs, th)
    return (mat.logdet() * (-0.5 * beta)).exp()


def quadratic_covariations(params, x=None):
    """Instantaneous quadratic covariation rates of a 2x2 Wishart state.

    Returns a dict keyed by ``"x11,x11"``, ``"x22,x22"``, ``"x12,x12"`` and
    ``"x11,x22"``; values are the ``dt`` coefficients at state ``x`` (default ``x0``).
    """
    if params.n != 2:
        raise ValidationError("quadratic_covariations is defined for n = 2 only")
    x = params.x0 if x is None else matcore.as_symmetric(x, "x")
    if x.shape != (2, 2):
        raise ValidationError("state x must be 2x2")
    s11, s12, s22 = params.sigma[0, 0], params.sigma[0, 1], params.sigma[1, 1]
    x11, x12, x22 = x[0, 0], x[0, 1], x[1, 1]
    return {
        "x11,x11": 4 * x11 * (s11 ** 2 + s12 ** 2),
        "x22,x22": 4 * x22 * (s12 ** 2 + s22 ** 2),
        "x12,x12": (x11 * (s12 ** 2 + s22 ** 2) + 2 * x12 * s12 * (s11 + s22)
                    + x22 * (s11 ** 2 + s12 ** 2)),
        "x11,x22": 4 * x12 * s12 * (s11 + s22),
    }


def zero_dependence_equivalent(params):
    """Same per-loss quadratic variation, zero instantaneous covariation between x11 and x22.

    ``sigma`` becomes ``diag(sqrt(s11^2 + s12^2), sqrt(s22^2 + s12^2))`` and ``x0``
    is re-solved from the Lyapunov equation.
    """
    if params.n != 2:
        raise ValidationError("zero_dependence_equivalent is defined for n = 2 only")
    if not params.is_bru:
        raise ValidationError("zero_dependence_equivalent requires the Bru case")
    s = params.sigma
    tilde = np.diag([np.hypot(s[0, 0], s[0, 1]), np.hypot(s[1, 1], s[0, 1])])
    return params.with_sigma(tilde)
