"""Damped Fourier/Laplace inversion of moment generating functions.

For a scalar variable ``Y`` and a weight ``W`` (a product of other payoffs, or
1) the engine evaluates

    E[Y^p W 1{Y > y*}] = 1/pi int_0^inf Re[ e^{-z y*} F(z) sum_j C(p, j) y*^{p-j} j! / z^{j+1} ] du

along ``z = alpha - i u`` with ``F(z) = E[W e^{z Y}]``. With ``alpha > 0`` this is
the upper-tail moment directly. With ``alpha < 0`` the contour passes on the
other side of the pole at the origin and the integral equals
``-E[Y^p W 1{Y < y*}]``; the engine then adds the unconditional moment.

Providers describe ``(Y, W)`` through :class:`MgfProvider`; nothing here is
specific to the Wishart model.
"""

import math
import threading
import warnings as _warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from . import quadrature
from .exceptions import BracketError, ConvergenceError, DomainError, ValidationError


class MgfProvider:
    """Interface for a scalar MGF ``z -> E[e^{z Y}]`` with optional weights.

    Subclasses implement :meth:`mgf` and :meth:`domain`; jet-capable providers
    also implement :meth:`weighted`, and two-dimensional ones :meth:`joint`.

    Attributes
    ----------
    support : {"positive", "real"}
        Support of ``Y``; a positive variable admits any negative damping.
    thread_safe : bool
        Whether concurrent calls are allowed. The engine serializes calls to
        providers that declare ``False``.
    """

    support = "positive"
    thread_safe = True

    def mgf(self, z):
        raise NotImplementedError

    def weighted(self, z, q_orders):
        """``E[prod_k X_k^{q_k} e^{z Y}]``; the default handles ``q_orders`` all zero."""
        if any(q != 0 for q in q_orders):
            raise NotImplementedError(f"{type(self).__name__} has no weighted variant")
        return self.mgf(z)

    def weighted_table(self, z, q_box, max_degree=None):
        """All ``weighted(z, q)`` for ``q`` in the box, shape ``(len(z),) + (q_box + 1)``."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros((z.size,) + tuple(q + 1 for q in q_box), dtype=complex)
        for q in np.ndindex(*[q + 1 for q in q_box]):
            if max_degree is None or sum(q) <= max_degree:
                out[(slice(None),) + q] = self.weighted(z, q)
        return out

    def domain(self):
        """Open interval ``(lo, hi)`` of real ``z`` where the MGF is finite."""
        return (-math.inf, math.inf)

    def joint(self, z1, z2):
        """``E[e^{z1 Y + z2 Z}]`` for the two-dimensional route."""
        raise NotImplementedError(f"{type(self).__name__} has no joint MGF")

    def joint_domain(self, alpha1):
        """Interval of real ``z2`` keeping ``(alpha1, z2)`` inside the joint domain."""
        raise NotImplementedError

    def __call__(self, z):
        return self.mgf(z)


class FunctionProvider(MgfProvider):
    """Provider built from plain callables.

    Parameters
    ----------
    mgf : callable
        Vectorized ``z -> E[e^{zY}]``.
    domain : tuple of float
        Real interval where ``mgf`` is finite.
    weighted : callable, optional
        ``(z, q_orders) -> E[W e^{zY}]``.
    joint, joint_domain : callable, optional
        Two-dimensional MGF and its domain slice.
    support : str
    thread_safe : bool
    """

    def __init__(self, mgf, domain=(-math.inf, math.inf), weighted=None, joint=None,
                 joint_domain=None, support="positive", thread_safe=True):
        self._mgf = mgf
        self._domain = tuple(domain)
        self._weighted = weighted
        self._joint = joint
        self._joint_domain = joint_domain
        self.support = support
        self.thread_safe = thread_safe

    def mgf(self, z):
        return self._mgf(z)

    def weighted(self, z, q_orders):
        if self._weighted is None:
            return super().weighted(z, q_orders)
        return self._weighted(z, q_orders)

    def domain(self):
        return self._domain

    def joint(self, z1, z2):
        if self._joint is None:
            return super().joint(z1, z2)
        return self._joint(z1, z2)

    def joint_domain(self, alpha1):
        if self._joint_domain is None:
            return (-math.inf, math.inf)
        return self._joint_domain(alpha1)


_LOCKS = {}
_LOCKS_GUARD = threading.Lock()


def _call(provider, fn, *args):
    if provider.thread_safe:
        return fn(*args)
    with _LOCKS_GUARD:
        lock = _LOCKS.setdefault(id(provider), threading.Lock())
    with lock:
        return fn(*args)


@dataclass(frozen=True)
class InversionConfig:
    """Settings of the inversion engine.

    Attributes
    ----------
    alpha_policy : {"auto", "fixed"}
        ``auto`` picks the damping at the saddle point of the integrand modulus.
    alpha : float, optional
        Damping for the ``fixed`` policy; its sign selects the branch.
    side : {"auto", "positive", "negative"}
        Branch preference for the ``auto`` policy.
    u_max : float, optional
        Fixed truncation of the frequency axis; adaptive when omitted.
    tol : float
        Absolute tolerance on each integral.
    max_subdivisions : int
        Interval budget of the adaptive quadrature.
    chunk : int
        Largest batch of contour points passed to a provider at once.
    """

    alpha_policy: str = "auto"
    alpha: Optional[float] = None
    side: str = "auto"
    u_max: Optional[float] = None
    tol: float = 1e-10
    max_subdivisions: int = 40000
    chunk: int = 8192

    def __post_init__(self):
        if self.alpha_policy not in ("auto", "fixed"):
            raise ValidationError("alpha_policy must be 'auto' or 'fixed'")
        if self.alpha_policy == "fixed" and (self.alpha is None or self.alpha == 0):
            raise ValidationError("fixed policy needs a nonzero alpha")
        if self.side not in ("auto", "positive", "negative"):
            raise ValidationError("side must be 'auto', 'positive' or 'negative'")
        if self.u_max is not None and not self.u_max > 0:
            raise ValidationError("u_max must be positive")
        if not self.tol > 0:
            raise ValidationError("tol must be positive")


@dataclass
class MomentResult:
    value: float
    abs_error_estimate: float
    evaluations: int
    warnings: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# helpers


def _evaluate(provider, fn, z, chunk):
    z = np.asarray(z, dtype=complex)
    if z.size <= chunk:
        return np.asarray(_call(provider, fn, z), dtype=complex)
    parts = [np.asarray(_call(provider, fn, z[i:i + chunk]), dtype=complex)
             for i in range(0, z.size, chunk)]
    return np.concatenate(parts)


def _kernel(z, p, y_star):
    out = np.zeros_like(z)
    for j in range(p + 1):
        out += math.comb(p, j) * y_star ** (p - j) * math.factorial(j) / z ** (j + 1)
    return np.exp(-z * y_star) * out


def _log_mgf_real(provider, alpha):
    with np.errstate(all="ignore"):
        try:
            val = _evaluate(provider, provider.mgf, np.array([alpha]), 1)[0]
        except (DomainError, ArithmeticError):
            return math.inf
    val = abs(val)
    if not np.isfinite(val) or val <= 0:
        return math.inf
    return math.log(val)


def _usable(bound, frac=0.98):
    return bound * frac if math.isfinite(bound) else math.inf


def _saddle(provider, y_star, side, p=0):
    """Damping minimizing ``log|Phi(a)| - a y* - (p+1) log|a|`` on one side of zero."""
    lo, hi = provider.domain()
    bound = _usable(hi) if side > 0 else _usable(-lo)
    if bound <= 0:
        raise DomainError("MGF domain does not extend to the requested side of zero")
    cap = min(bound, 1e4 * max(1.0, 1.0 / max(abs(y_star), 1e-12)))
    cap = min(cap, 1e6)

    def obj(s):
        a = side * math.exp(s)
        return _log_mgf_real(provider, a) - a * y_star - (p + 1) * s

    s_lo, s_hi = math.log(cap) - 30.0, math.log(cap)
    grid = np.linspace(s_lo, s_hi, 61)
    vals = np.array([obj(s) for s in grid])
    k = int(np.argmin(vals))
    a_, b_ = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    if b_ > a_:
        res = optimize.minimize_scalar(obj, bounds=(a_, b_), method="bounded",
                                       options={"xatol": 1e-6})
        s = res.x if res.fun <= vals[k] else grid[k]
    else:
        s = grid[k]
    return side * math.exp(s)


def _choose_side(provider, y_star, cfg):
    if cfg.side != "auto":
        return 1 if cfg.side == "positive" else -1
    lo, hi = provider.domain()
    if lo >= 0:
        return 1
    if hi <= 0:
        return -1
    try:
        mean = raw_moment(provider, 1)
    except (ConvergenceError, DomainError, ArithmeticError):
        return 1
    return 1 if y_star >= mean.real else -1


def choose_alpha(provider, y_star, cfg, p=0):
    """Damping used by the engine for a threshold ``y_star``."""
    if cfg.alpha_policy == "fixed":
        lo, hi = provider.domain()
        if not lo < cfg.alpha < hi:
            raise DomainError(f"alpha = {cfg.alpha} lies outside the MGF domain ({lo}, {hi})")
        return float(cfg.alpha)
    return _saddle(provider, y_star, _choose_side(provider, y_star, cfg), p)


MIN_DECAY = 1.9


def _truncation(envelope, alpha, y_star, tol, u_fixed=None, oscillatory=False):
    """Adaptive frequency cutoff from a power-law fit of the integrand envelope.

    The fitted exponent is capped at 3 when bounding the remainder, so a fast
    pre-asymptotic decay cannot hide a slow algebraic tail. With
    ``oscillatory=True`` and an envelope decaying at least like ``u^-2``, a
    cutoff is returned once ``u`` passes a switch point even if the algebraic
    bound is not met; the tail bound is then ``nan`` and the caller integrates
    the remainder as a Fourier integral.
    """
    if u_fixed is not None:
        return float(u_fixed), math.nan, math.nan
    u = max(20.0, 20.0 * abs(alpha), 20.0 / max(abs(y_star), 1e-3) if y_star else 20.0)
    u_switch = 1e3 * max(1.0, 1.0 / abs(y_star)) if (oscillatory and y_star) else math.inf
    kappa = math.nan
    for _ in range(60):
        pts = u * np.geomspace(1.0, 2.0, 9)
        env = envelope(pts)
        if np.all(env < 1e-300):
            # underflow across a whole octave: exponential decay, nothing left
            return float(pts[-1]), math.inf, 0.0
        env = np.maximum(env, 1e-300)
        kappa = -np.polyfit(np.log(pts), np.log(env), 1)[0]
        k_eff = min(kappa, 3.0)
        if k_eff > 1.0:
            cmax = np.max(env * pts ** k_eff)
            tail = cmax * (2 * u) ** (1 - k_eff) / (k_eff - 1)
            if tail < tol / 10:
                return 2 * u, kappa, tail
        if u >= u_switch and kappa >= MIN_DECAY:
            return u, kappa, math.nan
        u *= 2
        if u > 1e10:
            break
    raise ConvergenceError(
        f"integrand tail does not decay fast enough (fitted exponent {kappa:.3g})")


def _breakpoints(u_max, y_star):
    first = max(10.0 / abs(y_star), 10.0) if y_star else 10.0
    first = min(first, u_max / 2)
    pts = [0.0]
    b = first
    while b < u_max:
        pts.append(b)
        b *= 2
    pts.append(u_max)
    return pts


def _line_integral(provider, fn, ps, y_star, alpha, cfg):
    """``1/pi int_0^U Re[K_p(z) fn(z)] du`` for every ``p`` in ``ps``.

    ``fn`` maps ``k`` contour points to an array ``(k,) + shape``; the result has
    shape ``(len(ps),) + shape``.
    """
    ps = list(ps)

    def g(u):
        z = alpha - 1j * np.asarray(u, dtype=float)
        vals = _evaluate(provider, fn, z, cfg.chunk)
        extra = (1,) * (vals.ndim - 1)
        ker = np.stack([_kernel(z, p, y_star) for p in ps], axis=1)
        return ker.reshape(ker.shape + extra) * vals[:, None] / math.pi

    def envelope(u):
        return np.abs(g(u)).reshape(len(u), -1).max(axis=1)

    u_max, kappa, tail_bound = _truncation(envelope, alpha, y_star, cfg.tol, cfg.u_max,
                                           oscillatory=True)
    res = quadrature.integrate(lambda u: g(u).real, _breakpoints(u_max, y_star),
                               tol=cfg.tol, max_intervals=cfg.max_subdivisions)
    value, nev = np.asarray(res.value, dtype=float), res.evaluations
    warns = []
    if cfg.u_max is None and math.isnan(tail_bound):
        tail, tail_bound, n_tail = _fourier_tail(g, u_max, y_star, cfg.tol)
        value, nev = value + tail, nev + n_tail
        warns.append(f"oscillatory tail integrated beyond u = {u_max:.3g}")
    if not res.converged:
        if res.abs_error > 10 * cfg.tol:
            raise ConvergenceError(
                f"quadrature error {res.abs_error:.3g} above tolerance {cfg.tol:.3g} "
                f"after {res.intervals} intervals")
        warns.append(f"tolerance met only approximately (error {res.abs_error:.2g})")
    if np.isfinite(kappa) and kappa < 2:
        warns.append(f"slow integrand decay (fitted exponent {kappa:.2f})")
    err = res.abs_error + (tail_bound if np.isfinite(tail_bound) else 0.0)
    diag = {"alpha": alpha, "u_max": u_max, "decay_exponent": float(kappa),
            "intervals": res.intervals}
    return value, err, nev, warns, diag


def _fourier_tail(g, u0, y_star, tol):
    """``int_{u0}^inf Re g(u) du`` for ``g = h(u) e^{i u y*}`` with a smooth ``h``.

    Each component of ``h`` goes to QUADPACK's QAWF routine through
    :func:`scipy.integrate.quad` with ``cos``/``sin`` weights.
    """
    w = abs(y_star)
    sgn = 1.0 if y_star > 0 else -1.0
    cache = {}

    def h(u):
        if u not in cache:
            cache[u] = (g(np.array([u]))[0] * np.exp(-1j * u * y_star)).ravel()
        return cache[u]

    size = h(u0).size
    out = np.empty(size)
    err = 0.0
    for k in range(size):
        c, ec = integrate.quad(lambda u: h(u)[k].real, u0, np.inf, weight="cos", wvar=w,
                               epsabs=tol / 10, limlst=200)
        s_, es = integrate.quad(lambda u: h(u)[k].imag, u0, np.inf, weight="sin", wvar=w,
                                epsabs=tol / 10, limlst=200)
        out[k] = c - sgn * s_
        err = max(err, ec + es)
    shape = np.shape(g(np.array([u0]))[0])
    return out.reshape(shape), err, len(cache)


def _raw_table(provider, fn, p_max, radius=None, nodes=64):
    """Unconditional ``E[Y^p ...]`` for ``p <= p_max`` by a Cauchy integral of ``fn``."""
    lo, hi = provider.domain()
    if radius is None:
        radius = min(1.0, 0.25 * min(hi, -lo))
    if not radius > 0:
        raise DomainError("MGF domain does not contain a neighbourhood of zero")
    z = radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    vals = _evaluate(provider, fn, z, 4096)
    coeffs = np.fft.fft(vals, axis=0)[: p_max + 1] / nodes
    scale = np.array([math.factorial(p) / radius ** p for p in range(p_max + 1)])
    return coeffs * scale.reshape((-1,) + (1,) * (coeffs.ndim - 1))


def raw_moment(provider, p, q_orders=None, radius=None, nodes=64):
    """``E[Y^p W]`` by a Cauchy integral of ``z -> E[W e^{zY}]`` on a circle.

    The radius defaults to a quarter of the distance from the origin to the
    nearest edge of the MGF domain (capped at 1).
    """
    if q_orders is None:
        fn = provider.mgf
    else:
        fn = lambda zz: provider.weighted(zz, tuple(q_orders))  # noqa: E731
    out = _raw_table(provider, fn, p, radius, nodes)[p]
    return out.real if abs(out.imag) <= 1e-8 * max(1.0, abs(out.real)) else out


@dataclass
class MomentTable:
    """Tail moments ``E[Y^p prod X_k^{q_k} 1{Y > y*}]`` indexed by ``[p, q_1, ..., q_d]``."""

    values: np.ndarray
    abs_error_estimate: float
    evaluations: int
    warnings: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def __getitem__(self, index):
        return self.values[index]


def truncated_moment_table(provider, p_max, q_box, y_star, cfg=None, alpha=None,
                           max_degree=None):
    """All tail moments with ``p <= p_max`` and ``q`` in a box, from one vector integral.

    Parameters
    ----------
    provider : MgfProvider
        Must implement :meth:`MgfProvider.weighted_table` when ``q_box`` is nonempty.
    p_max : int
    q_box : tuple of int
        Largest order per weight direction.
    y_star : float
    cfg : InversionConfig, optional
    alpha : float, optional
        Damping override.
    max_degree : int, optional
        Cap on ``sum(q)``; entries beyond it are zero.

    Returns
    -------
    MomentTable
    """
    cfg = InversionConfig() if cfg is None else cfg
    p_max = int(p_max)
    if p_max < 0 or p_max > 12:
        raise ValidationError("moment order p must be an integer in [0, 12]")
    q_box = tuple(int(q) for q in q_box)
    if any(q < 0 for q in q_box):
        raise ValidationError("derivative orders must be nonnegative")
    y_star = float(y_star)
    if q_box:
        fn = lambda z: provider.weighted_table(z, q_box, max_degree)  # noqa: E731
    else:
        fn = provider.mgf
    if provider.support == "positive" and y_star <= 0:
        # the indicator is one almost surely
        full = np.real(_raw_table(provider, fn, p_max))
        return MomentTable(values=full, abs_error_estimate=0.0, evaluations=64,
                           diagnostics={"unconditional": full})
    if alpha is None:
        alpha = choose_alpha(provider, y_star, cfg)
    values, err, nev, warns, diag = _line_integral(provider, fn, range(p_max + 1),
                                                   y_star, alpha, cfg)
    if alpha < 0:
        full = np.real(_raw_table(provider, fn, p_max))
        values = full + values
        diag["unconditional"] = full
    return MomentTable(values=values, abs_error_estimate=err, evaluations=nev,
                       warnings=warns, diagnostics=diag)


def _moment(provider, p, q_orders, y_star, cfg, alpha=None):
    q_orders = tuple(int(q) for q in q_orders)
    table = truncated_moment_table(provider, p, q_orders, y_star, cfg, alpha)
    value = float(table.values[(p,) + q_orders])
    return MomentResult(value=value, abs_error_estimate=table.abs_error_estimate,
                        evaluations=table.evaluations, warnings=table.warnings,
                        diagnostics=table.diagnostics)


# ---------------------------------------------------------------------------
# public operations


def truncated_moment_1d(provider, p, y_star, cfg=None, alpha=None):
    """``E[Y^p 1{Y > y*}]``; ``p = 0`` gives the tail probability.

    Parameters
    ----------
    provider : MgfProvider
    p : int
    y_star : float
    cfg : InversionConfig
    alpha : float, optional
        Overrides the configured damping (shared-node evaluations).

    Returns
    -------
    MomentResult
    """
    return _moment(provider, p, (), y_star, cfg, alpha)


def truncated_cross_moment_1d(provider, p, q_orders, y_star, cfg=None, alpha=None):
    """``E[Y^p prod_k X_k^{q_k} 1{Y > y*}]`` through the weighted MGF of ``provider``."""
    return _moment(provider, p, q_orders, y_star, cfg, alpha)


def tail_probability(provider, y_star, cfg=None):
    return truncated_moment_1d(provider, 0, y_star, cfg)


def cdf(provider, u_point, cfg=None):
    """``P(Y <= u)`` by the Bromwich integral of the Laplace transform ``Phi(-s)``.

    The contour abscissa follows the same saddle-point rule as the damping. If
    the MGF is not finite for negative arguments, the upper-tail branch is used
    and complemented instead.
    """
    cfg = InversionConfig() if cfg is None else cfg
    lo, _ = provider.domain()
    warns = []
    if lo < 0:
        alpha = _saddle(provider, float(u_point), -1)
        value, err, nev, w, diag = _line_integral(provider, provider.mgf, [0],
                                                  float(u_point), alpha, cfg)
        prob = -float(value[0])
    else:
        res = truncated_moment_1d(provider, 0, u_point, cfg)
        prob, err, nev, w, diag = 1 - res.value, res.abs_error_estimate, res.evaluations, \
            res.warnings, res.diagnostics
    warns.extend(w)
    if prob < -1e-6 or prob > 1 + 1e-6:
        warns.append(f"CDF value {prob:.3g} outside [0, 1]; clipped")
        _warnings.warn(warns[-1], RuntimeWarning, stacklevel=2)
    prob = min(max(prob, 0.0), 1.0)
    return MomentResult(value=prob, abs_error_estimate=err, evaluations=nev,
                        warnings=warns, diagnostics=diag)


def quantile(provider, prob_level, cfg=None, xtol=1e-10):
    """Smallest ``x`` with ``P(Y <= x) = prob_level``, by bracketing and Brent's method.

    Raises
    ------
    BracketError
        If no sign change is found within an expanding bracket.
    """
    if not 0 < prob_level < 1:
        raise ValidationError("prob_level must lie in (0, 1)")
    target = 1.0 - prob_level

    def excess(x):
        return truncated_moment_1d(provider, 0, x, cfg).value - target

    mean = float(np.real(raw_moment(provider, 1)))
    var = float(np.real(raw_moment(provider, 2))) - mean ** 2
    sd = math.sqrt(var) if var > 0 else max(abs(mean), 1.0)
    lo, hi = mean - sd, mean + sd
    if provider.support == "positive":
        lo = max(lo, 0.0)
    f_lo, f_hi = excess(lo), excess(hi)
    for _ in range(60):
        if f_lo >= 0 >= f_hi:
            break
        if f_lo < 0:
            lo = lo - 2 * sd if provider.support != "positive" else lo / 2
            f_lo = excess(lo)
        if f_hi > 0:
            hi += 2 * sd
            f_hi = excess(hi)
        sd *= 1.5
    else:
        raise BracketError(f"no sign change for level {prob_level} in [{lo}, {hi}]")
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    return optimize.brentq(excess, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)


def truncated_cross_moment_2d(provider, p, q, y_star, cfg=None,
                              alpha1=None, alpha2=None):
    """``E[Y^p Z^q 1{Y > y*}]`` for a positive ``Z`` by a double inversion.

    Uses the joint MGF on the product contour and the symmetry
    ``F(-u1, -u2) = conj F(u1, u2)``:

        (1 / (2 pi^2)) int_0^inf int_0^inf Re[f(u1, u2) + f(u1, -u2)] du2 du1.

    Intended as an independent check of :func:`truncated_cross_moment_1d`; it
    is far slower and converges less reliably.
    """
    cfg = InversionConfig() if cfg is None else cfg
    p, q = int(p), int(q)
    y_star = float(y_star)
    if alpha1 is None:
        alpha1 = _saddle(provider, y_star, 1)
    if alpha1 <= 0:
        raise ValidationError("the two-dimensional route needs alpha1 > 0")
    lo2, hi2 = provider.joint_domain(alpha1)
    if alpha2 is None:
        zprov = FunctionProvider(lambda z: provider.joint(np.full_like(z, alpha1), z),
                                 domain=(lo2, hi2))
        alpha2 = _saddle(zprov, 0.0, 1, p=q)
    if not 0 < alpha2 < hi2:
        raise DomainError("alpha2 outside the joint MGF domain")
    qfact = math.factorial(q)

    def f(u1, u2):
        w1 = alpha1 - 1j * u1
        w2 = alpha2 - 1j * u2
        return (_kernel(w1, p, y_star) * qfact / w2 ** (q + 1)
                * _call(provider, provider.joint, w1, w2))

    tol = cfg.tol
    env2 = lambda u: np.abs(f(np.zeros_like(u), u))  # noqa: E731
    u2_max, _, _ = _truncation(env2, alpha2, 0.0, tol)
    env1 = lambda u: np.abs(f(u, np.zeros_like(u)))  # noqa: E731
    u1_max, _, _ = _truncation(env1, alpha1, y_star, tol)
    inner_pts = _breakpoints(u2_max, 0.0)

    evals = [0]

    def outer(u1s):
        out = np.empty(u1s.size)
        for i, u1 in enumerate(u1s):
            def inner(u2):
                uu = np.full_like(u2, u1)
                return (f(uu, u2) + f(uu, -u2)).real
            r = quadrature.integrate(inner, inner_pts, tol=tol,
                                     max_intervals=cfg.max_subdivisions)
            evals[0] += 2 * r.evaluations
            out[i] = r.value
        return out / (2 * math.pi ** 2)

    res = quadrature.integrate(outer, _breakpoints(u1_max, y_star), tol=tol * 10,
                               max_intervals=cfg.max_subdivisions)
    warns = [] if res.converged else [f"outer quadrature error {res.abs_error:.2g}"]
    return MomentResult(value=float(res.value), abs_error_estimate=res.abs_error,
                        evaluations=evals[0], warnings=warns,
                        diagnostics={"alpha1": alpha1, "alpha2": alpha2,
                                     "u1_max": u1_max, "u2_max": u2_max})
