"""Conditional tail risk measures of Wishart losses.

A loss is a spectral payoff ``tr[theta x_t]``. Conditional moments

    E[prod_k tr[theta_k x]^{p_k} | tr[theta_0 x] > x*]

are ratios of two damped inversions sharing the same contour and nodes: the
numerator uses jet coefficients of the MGF in the target directions, the
denominator is the tail probability. Two-date queries condition at ``t0`` and
measure the targets at ``t1``.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from . import inversion, matcore, wishart
from .exceptions import (DomainError, NegativeVariance, ValidationError,
                         ZeroTailProbability)
from .inversion import InversionConfig, MgfProvider, MomentResult

#: Denominators below this are reported as a zero-probability event.
MIN_TAIL_PROBABILITY = 1e-12


@dataclass(frozen=True, eq=False)
class SpectralPayoff:
    """The scalar loss ``tr[theta x]`` for a symmetric ``theta``."""

    theta: np.ndarray
    label: str = ""

    def __post_init__(self):
        th = matcore.as_symmetric(self.theta, "theta")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)
        if not self.label:
            object.__setattr__(self, "label", "tr[theta x]")

    @property
    def n(self):
        return self.theta.shape[0]

    @property
    def positive_semidefinite(self):
        return bool(np.linalg.eigvalsh(self.theta).min() >= -1e-14)

    @classmethod
    def loss(cls, i, n=2):
        """Diagonal entry ``x_ii`` (0-based ``i``)."""
        th = np.zeros((n, n))
        th[i, i] = 1.0
        return cls(th, f"x{i + 1}{i + 1}")

    @classmethod
    def portfolio(cls, n=2):
        """The sum of the diagonal losses, ``s = tr[x]``."""
        return cls(np.eye(n), "s")

    @classmethod
    def covariance(cls, i=0, j=1, n=2):
        """Off-diagonal entry ``x_ij`` via ``(e_ij + e_ji) / 2``."""
        th = np.zeros((n, n))
        th[i, j] = th[j, i] = 0.5
        return cls(th, f"x{i + 1}{j + 1}")

    def same_as(self, other):
        return np.array_equal(self.theta, other.theta)

    def __add__(self, other):
        return SpectralPayoff(self.theta + other.theta, f"{self.label}+{other.label}")


@dataclass(frozen=True)
class OneDate:
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValidationError("OneDate requires t > 0")


@dataclass(frozen=True)
class TwoDates:
    t0: float
    t1: float

    def __post_init__(self):
        if not 0 < self.t0 < self.t1:
            raise ValidationError("TwoDates requires 0 < t0 < t1")


Dates = Union[OneDate, TwoDates]


@dataclass(frozen=True)
class TailQuery:
    """``E[prod tr[theta_k x]^{p_k} | tr[theta_0 x] > threshold]``.

    With :class:`TwoDates` the conditioner is observed at ``t0`` and the
    targets at ``t1``.
    """

    conditioner: SpectralPayoff
    threshold: float
    targets: Tuple[Tuple[SpectralPayoff, int], ...] = ()
    dates: Dates = OneDate(1.0)
    label: str = ""

    def __post_init__(self):
        targets = tuple((pay, int(order)) for pay, order in self.targets)
        if any(o < 0 for _, o in targets):
            raise ValidationError("target orders must be nonnegative")
        if sum(o for _, o in targets) > 6:
            raise ValidationError("total target order must not exceed 6")
        object.__setattr__(self, "targets", targets)
        if not self.label:
            object.__setattr__(self, "label", self.describe())

    def describe(self):
        two = isinstance(self.dates, TwoDates)
        sub0 = ",t0" if two else ""
        sub1 = ",t1" if two else ""
        parts = []
        for pay, order in self.targets:
            if order:
                parts.append(pay.label + sub1 + (f"^{order}" if order > 1 else ""))
        lhs = " ".join(parts) if parts else "1"
        return f"E[{lhs} | {self.conditioner.label}{sub0} > {self.threshold:g}]"


# ---------------------------------------------------------------------------
# providers


def _sqrtm_psd(a):
    w, v = np.linalg.eigh(a)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.T


def _real_domain(vs, theta):
    """Interval of real ``z`` with ``I - 2 z vs^{1/2} theta vs^{1/2}`` positive definite."""
    s = _sqrtm_psd(vs)
    lam = np.linalg.eigvalsh(s @ theta @ s)
    hi = 1 / (2 * lam.max()) if lam.max() > 0 else math.inf
    lo = 1 / (2 * lam.min()) if lam.min() < 0 else -math.inf
    return lo, hi


class WishartProvider(MgfProvider):
    """``Y = tr[theta0 x_t0]`` with weights ``prod tr[theta_k x_t]`` at ``t = t1`` or ``t0``.

    Parameters
    ----------
    params : WishartParams
    theta0 : array_like
        Conditioner direction.
    t0 : float
        Date of the conditioner.
    targets : sequence of array_like
        Weight directions.
    t1 : float, optional
        Date of the weights; equal to ``t0`` when omitted.
    convention : str
        Two-date MGF convention, see :func:`wishart.mgf_two_dates`.
    """

    def __init__(self, params, theta0, t0, targets=(), t1=None, convention="tower"):
        self.params = params
        self.theta0 = np.asarray(theta0, dtype=float)
        self.t0 = float(t0)
        self.t1 = None if t1 is None or t1 == t0 else float(t1)
        self.targets = [np.asarray(th, dtype=float) for th in targets]
        self.convention = convention
        psd = np.linalg.eigvalsh(self.theta0).min() >= -1e-14
        self.support = "positive" if psd else "real"
        self._domain = _real_domain(params.varsigma(self.t0), self.theta0)

    def domain(self):
        return self._domain

    def _arg(self, z):
        z = np.asarray(z, dtype=complex)
        return z[:, None, None] * self.theta0

    def mgf(self, z):
        return wishart.mgf(self.params, self.t0, self._arg(z)).value

    def weighted_table(self, z, q_box, max_degree=None):
        q_box = tuple(q_box)
        if not q_box or not any(q_box):
            base = self.mgf(z)
            return base.reshape(base.shape + (1,) * len(q_box))
        if len(q_box) != len(self.targets):
            raise ValidationError("one order per target direction is required")
        if self.t1 is None:
            jet = wishart.mgf_jet(self.params, self.t0, self._arg(z), self.targets, q_box,
                                  max_degree)
        else:
            jet = wishart.mgf_two_dates_jet(self.params, self.t0, self.t1, self._arg(z),
                                            self.targets, orders=q_box,
                                            convention=self.convention,
                                            max_degree=max_degree)
        coeffs = jet.coeffs
        scale = np.ones(coeffs.shape[:len(q_box)])
        for axis, q in enumerate(q_box):
            f = np.array([math.factorial(k) for k in range(q + 1)], dtype=float)
            scale = scale * f.reshape((1,) * axis + (-1,) + (1,) * (len(q_box) - axis - 1))
        out = coeffs * scale.reshape(scale.shape + (1,) * (coeffs.ndim - len(q_box)))
        return np.moveaxis(out, -1, 0) if out.ndim > len(q_box) else out[None]

    def weighted(self, z, q_orders):
        table = self.weighted_table(z, q_orders, sum(q_orders))
        return table[(slice(None),) + tuple(q_orders)]

    # two-dimensional route (one date, first target as Z)
    def joint(self, z1, z2):
        if self.t1 is not None or not self.targets:
            raise NotImplementedError("joint MGF needs one date and a target direction")
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        theta = z1[..., None, None] * self.theta0 + z2[..., None, None] * self.targets[0]
        return wishart.mgf(self.params, self.t0, theta).value

    def joint_domain(self, alpha1):
        vs = self.params.varsigma(self.t0)
        s = _sqrtm_psd(vs)
        base = s @ (alpha1 * self.theta0) @ s
        direction = s @ self.targets[0] @ s

        def ok(a2):
            return np.linalg.eigvalsh(np.eye(len(vs)) - 2 * (base + a2 * direction))[0] > 0

        if not ok(0.0):
            raise DomainError("alpha1 lies outside the MGF domain")

        def edge(sign):
            step = 1.0
            while ok(sign * step):
                step *= 2
                if step > 1e12:
                    return sign * math.inf
            lo, hi = 0.0, step
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if ok(sign * mid):
                    lo = mid
                else:
                    hi = mid
            return sign * lo

        return edge(-1.0), edge(1.0)


class MatrixGammaProvider(MgfProvider):
    """Stationary law: ``Y = tr[theta0 x]`` with ``x`` matrix gamma ``(beta, varsigma_inf)``."""

    def __init__(self, beta, varsigma_inf, theta0, targets=()):
        self.beta = float(beta)
        self.vs = np.asarray(varsigma_inf, dtype=float)
        self.theta0 = np.asarray(theta0, dtype=float)
        self.targets = [np.asarray(th, dtype=float) for th in targets]
        psd = np.linalg.eigvalsh(self.theta0).min() >= -1e-14
        self.support = "positive" if psd else "real"
        self._domain = _real_domain(self.vs, self.theta0)

    def domain(self):
        return self._domain

    def mgf(self, z):
        z = np.asarray(z, dtype=complex)
        return wishart.stationary_mgf(self.beta, self.vs, z[:, None, None] * self.theta0)

    def weighted_table(self, z, q_box, max_degree=None):
        q_box = tuple(q_box)
        z = np.asarray(z, dtype=complex)
        if not q_box or not any(q_box):
            base = self.mgf(z)
            return base.reshape(base.shape + (1,) * len(q_box))
        jet = wishart.stationary_mgf_jet(self.beta, self.vs, z[:, None, None] * self.theta0,
                                         self.targets, q_box, max_degree)
        out = np.array(jet.coeffs)
        for idx in np.ndindex(*out.shape[:len(q_box)]):
            out[idx] *= math.prod(math.factorial(k) for k in idx)
        return np.moveaxis(out, -1, 0)

    def weighted(self, z, q_orders):
        return self.weighted_table(z, q_orders, sum(q_orders))[(slice(None),) + tuple(q_orders)]


# ---------------------------------------------------------------------------
# conditional moments


def _split_targets(query):
    """Fold one-date targets equal to the conditioner into the kernel power ``p``."""
    p = 0
    rest = []
    one_date = isinstance(query.dates, OneDate)
    for pay, order in query.targets:
        if order == 0:
            continue
        if one_date and pay.same_as(query.conditioner):
            p += order
        else:
            rest.append((pay, order))
    return p, rest


def make_provider(params, query, convention="tower"):
    p, rest = _split_targets(query)
    if isinstance(query.dates, OneDate):
        t0, t1 = query.dates.t, None
    else:
        t0, t1 = query.dates.t0, query.dates.t1
    prov = WishartProvider(params, query.conditioner.theta, t0, [pay.theta for pay, _ in rest],
                           t1=t1, convention=convention)
    return prov, p, tuple(o for _, o in rest)


def _ratio(table, index, what):
    den = table.values[(0,) * table.values.ndim]
    if den < MIN_TAIL_PROBABILITY:
        raise ZeroTailProbability(f"{what}: tail probability {den:.3g} is numerically zero")
    num = table.values[index]
    ratio = num / den
    err = (table.abs_error_estimate * (1 + abs(ratio))) / den
    return float(ratio), float(err), float(den)


def conditional_moment(params, query, cfg=None, convention="tower"):
    """Evaluate a :class:`TailQuery`.

    Parameters
    ----------
    params : WishartParams
        Bru-case parameters.
    query : TailQuery
    cfg : InversionConfig, optional
    convention : {"tower", "as_printed"}
        Two-date MGF convention.

    Returns
    -------
    MomentResult
        ``diagnostics`` holds the tail probability and the damping used.

    Raises
    ------
    ZeroTailProbability
        If the conditioning event has probability below 1e-12.
    """
    if not params.is_bru:
        raise ValidationError("risk measures are implemented for the Bru case only")
    cfg = InversionConfig() if cfg is None else cfg
    prov, p, q = make_provider(params, query, convention)
    table = inversion.truncated_moment_table(prov, p, q, query.threshold, cfg,
                                             max_degree=sum(q) if q else None)
    value, err, den = _ratio(table, (p,) + q, query.label)
    diag = dict(table.diagnostics)
    diag["tail_probability"] = den
    return MomentResult(value=value, abs_error_estimate=err, evaluations=table.evaluations,
                        warnings=list(table.warnings), diagnostics=diag)


def _dates(t=None, t1=None, dates=None):
    if dates is not None:
        return dates
    if t1 is None:
        return OneDate(1.0 if t is None else float(t))
    return TwoDates(float(t), float(t1))


def _payoff_moments(params, payoff, conditioner, threshold, dates, order, cfg, convention):
    """``E[Y^k | C > c]`` for ``k <= order`` from one vector integral."""
    q = TailQuery(conditioner, threshold, ((payoff, order),), dates)
    prov, p, qq = make_provider(params, q, convention)
    cfg = InversionConfig() if cfg is None else cfg
    table = inversion.truncated_moment_table(prov, p, qq, threshold, cfg)
    den = table.values[(0,) * table.values.ndim]
    if den < MIN_TAIL_PROBABILITY:
        raise ZeroTailProbability(f"tail probability {den:.3g} is numerically zero")
    if qq:
        moments = np.array([table.values[(0, k)] for k in range(order + 1)]) / den
    else:
        moments = np.array([table.values[k] for k in range(order + 1)]) / den
    return moments, table.abs_error_estimate / den


def tce(params, payoff, threshold, t=1.0, t1=None, cfg=None, conditioner=None,
        convention="tower"):
    """Tail conditional expectation ``E[Y | C > threshold]`` (``C = Y`` by default)."""
    conditioner = payoff if conditioner is None else conditioner
    q = TailQuery(conditioner, threshold, ((payoff, 1),), _dates(t, t1))
    return conditional_moment(params, q, cfg, convention).value


def tail_variance(params, payoff, threshold, t=1.0, t1=None, cfg=None, conditioner=None,
                  convention="tower"):
    """``E[Y^2 | C > c] - E[Y | C > c]^2``.

    Raises
    ------
    NegativeVariance
        If the result is negative beyond the quadrature error.
    """
    conditioner = payoff if conditioner is None else conditioner
    mom, err = _payoff_moments(params, payoff, conditioner, threshold, _dates(t, t1), 2,
                               cfg, convention)
    tv = mom[2] - mom[1] ** 2
    if tv < 0:
        if tv < -10 * err * (1 + abs(mom[1])) - 1e-12:
            raise NegativeVariance(f"tail variance {tv:.3g}; tighten the quadrature tolerance")
        tv = 0.0
    return float(tv)


def _cross_table(params, payoffs, conditioner, threshold, dates, degree, cfg, convention):
    """``E[prod Y_k^{q_k} | C > c]`` for all ``sum(q) <= degree``, indexed by ``q``."""
    cfg = InversionConfig() if cfg is None else cfg
    t0, t1 = (dates.t, None) if isinstance(dates, OneDate) else (dates.t0, dates.t1)
    prov = WishartProvider(params, conditioner.theta, t0, [p.theta for p in payoffs], t1=t1,
                           convention=convention)
    box = (degree,) * len(payoffs)
    table = inversion.truncated_moment_table(prov, 0, box, threshold, cfg, max_degree=degree)
    den = table.values[(0,) * table.values.ndim]
    if den < MIN_TAIL_PROBABILITY:
        raise ZeroTailProbability(f"tail probability {den:.3g} is numerically zero")
    return table.values[0] / den


def tail_covariance(params, payoff_a, payoff_b, conditioner, threshold, t=1.0, t1=None,
                    cfg=None, convention="tower"):
    """``E[Y_a Y_b | C > c] - E[Y_a | C > c] E[Y_b | C > c]``."""
    m = _cross_table(params, [payoff_a, payoff_b], conditioner, threshold, _dates(t, t1), 2,
                     cfg, convention)
    return float(m[1, 1] - m[1, 0] * m[0, 1])


def tail_skewness(params, payoff, threshold, t=1.0, t1=None, cfg=None, conditioner=None,
                  components=None, convention="tower"):
    """Standardized third central tail moment of ``Y`` given ``C > c``.

    With ``components=(Y1, Y2)`` and ``Y = Y1 + Y2`` the third moment is
    assembled from the cross moments ``E[Y1^i Y2^j | C > c]``, ``i + j = 3``.
    """
    conditioner = payoff if conditioner is None else conditioner
    dates = _dates(t, t1)
    if components is None:
        mom, _ = _payoff_moments(params, payoff, conditioner, threshold, dates, 3, cfg,
                                 convention)
        m1, m2, m3 = mom[1], mom[2], mom[3]
    else:
        m = _cross_table(params, list(components), conditioner, threshold, dates, 3, cfg,
                         convention)
        m1 = m[1, 0] + m[0, 1]
        m2 = m[2, 0] + 2 * m[1, 1] + m[0, 2]
        m3 = m[3, 0] + 3 * m[2, 1] + 3 * m[1, 2] + m[0, 3]
    tv = m2 - m1 ** 2
    if tv <= 0:
        raise NegativeVariance(f"tail variance {tv:.3g} is not positive")
    return float((m3 - 3 * tv * m1 - m1 ** 3) / tv ** 1.5)


# ---------------------------------------------------------------------------
# batches and dependence comparison


def evaluate_batch(params, queries, cfg=None, convention="tower", max_workers=None):
    """Evaluate queries in parallel; errors are returned in place of results."""

    def one(q):
        try:
            return conditional_moment(params, q, cfg, convention)
        except Exception as exc:  # reported per query by callers
            return exc

    queries = list(queries)
    if max_workers == 1 or len(queries) <= 1:
        return [one(q) for q in queries]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, queries))


@dataclass
class DependenceRow:
    label: str
    value: float
    zero_dependence_value: float
    pct_diff: float


@dataclass
class DependenceReport:
    rows: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.rows)


DIFF_MODES = ("relative", "points")


def percent_diff(new, base, mode="relative"):
    """``100 (new - base) / base``, or ``100 (new - base)`` in ``"points"`` mode."""
    if mode == "relative":
        return 100.0 * (new - base) / base
    if mode == "points":
        return 100.0 * (new - base)
    raise ValidationError(f"diff mode must be one of {DIFF_MODES}")


def dependence_report(params, queries, cfg=None, convention="tower", max_workers=None,
                      diff_mode="relative"):
    """Evaluate queries under ``params`` and its zero-dependence equivalent.

    ``diff_mode="points"`` reports ``100 (tilde - base)`` instead of a relative
    percentage.
    """
    if diff_mode not in DIFF_MODES:
        raise ValidationError(f"diff mode must be one of {DIFF_MODES}")
    tilde = wishart.zero_dependence_equivalent(params)
    queries = list(queries)
    base = evaluate_batch(params, queries, cfg, convention, max_workers)
    alt = evaluate_batch(tilde, queries, cfg, convention, max_workers)
    report = DependenceReport()
    for q, r0, r1 in zip(queries, base, alt):
        for r in (r0, r1):
            if isinstance(r, Exception):
                raise r
        report.rows.append(DependenceRow(q.label, r0.value, r1.value,
                                         percent_diff(r1.value, r0.value, diff_mode)))
    return report
