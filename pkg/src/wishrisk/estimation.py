"""Claims ingestion, weekly aggregation and method-of-moments fitting.

The stationary law of the Bru-case Wishart process is matrix gamma with shape
``beta / 2`` and scale ``2 varsigma_inf``. Its diagonal moments identify the
parameters:

    beta = 2 E[x_ii]^2 / Var[x_ii],   vs_ii = Var[x_ii] / (2 E[x_ii]),
    vs_ij^2 = Cov[x_ii, x_jj] / (2 beta).

Weekly totals are treated as i.i.d. draws from that law.
"""

import csv
import datetime as _dt
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import inversion
from .exceptions import DegenerateSample, EmptyPanel, ParseError, ValidationError
from .inversion import InversionConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClaimsRecord:
    date: _dt.date
    line_values: Dict[str, float]


@dataclass
class WeeklyPanel:
    """Weekly totals per line; only weeks positive in every retained line."""

    weeks: List[tuple]
    totals: np.ndarray
    lines: List[str]
    dropped: int = 0

    def __len__(self):
        return len(self.weeks)


def _parse_date(text, fmt, line):
    text = text.strip()
    try:
        if fmt is None:
            return _dt.date.fromisoformat(text)
        return _dt.datetime.strptime(text, fmt).date()
    except ValueError as exc:
        raise ParseError(f"cannot parse date {text!r}", line) from exc


def ingest_csv(path, line_columns, date_column, delimiter=",", date_format=None):
    """Read claim records from a CSV file with a header row.

    Parameters
    ----------
    path : str or path-like
    line_columns : sequence of str
        Columns holding the per-line claim amounts.
    date_column : str
    delimiter : str
    date_format : str, optional
        ``strptime`` format; ISO dates are expected when omitted.

    Returns
    -------
    list of ClaimsRecord

    Raises
    ------
    ParseError
        Missing columns, unparseable values or negative amounts, with the
        offending line number.
    """
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            raise ParseError("empty file", 1)
        missing = [c for c in [date_column, *line_columns] if c not in reader.fieldnames]
        if missing:
            raise ParseError(f"missing columns {missing}", 1)
        for row in reader:
            line = reader.line_num
            date = _parse_date(row[date_column] or "", date_format, line)
            values = {}
            for col in line_columns:
                raw = (row[col] or "").strip()
                try:
                    amount = float(raw)
                except ValueError as exc:
                    raise ParseError(f"column {col!r}: not a number {raw!r}", line) from exc
                if not np.isfinite(amount) or amount < 0:
                    raise ParseError(f"column {col!r}: amount must be >= 0, got {raw}", line)
                values[col] = amount
            records.append(ClaimsRecord(date, values))
    return records


def aggregate_weekly(records, lines):
    """Sum claims per ISO-8601 week and keep weeks positive in every line.

    Raises
    ------
    EmptyPanel
        If no week survives the filter.
    """
    if not records:
        raise EmptyPanel("no claim records")
    lines = list(lines)
    buckets = {}
    for rec in records:
        iso = rec.date.isocalendar()
        key = (iso[0], iso[1])
        acc = buckets.setdefault(key, np.zeros(len(lines)))
        acc += [rec.line_values.get(name, 0.0) for name in lines]
    weeks = sorted(buckets)
    totals = np.array([buckets[w] for w in weeks])
    keep = np.all(totals > 0, axis=1)
    dropped = int((~keep).sum())
    if not keep.any():
        raise EmptyPanel("no week has positive totals in every line")
    if dropped:
        log.info("dropped %d of %d weeks without positive totals", dropped, len(weeks))
    return WeeklyPanel(weeks=[w for w, k in zip(weeks, keep) if k], totals=totals[keep],
                       lines=lines, dropped=dropped)


@dataclass
class MatrixGammaEstimate:
    beta_hat: float
    varsigma_inf_hat: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    covariance: np.ndarray
    per_line_beta: np.ndarray
    implied_correlation: float
    sample_correlation: float
    n_obs: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def positive_definite(self):
        return bool(np.linalg.eigvalsh(self.varsigma_inf_hat).min() > 0)


def _mom(x, ddof):
    n_obs, n = x.shape
    mu = x.mean(axis=0)
    cov = np.cov(x, rowvar=False, ddof=ddof).reshape(n, n)
    var = np.diag(cov).copy()
    if np.any(var <= 0) or np.any(mu <= 0):
        raise DegenerateSample("every line needs a positive mean and variance")
    per_line = 2 * mu ** 2 / var
    beta = float(per_line.mean())
    vs = np.diag(var / (2 * mu))
    for i in range(n):
        for j in range(i + 1, n):
            radicand = cov[i, j] / (2 * beta)
            if radicand < 0:
                raise DegenerateSample(
                    f"negative sample covariance between lines {i} and {j}; the matrix "
                    "gamma law implies Cov[x_ii, x_jj] = 2 beta vs_ij^2 >= 0. Check the "
                    "data or fit the lines separately")
            sign = 1.0 if cov[i, j] >= 0 else -1.0
            vs[i, j] = vs[j, i] = sign * np.sqrt(radicand)
    corr = cov / np.sqrt(np.outer(var, var))
    return beta, vs, mu, var, cov, per_line, corr


def implied_correlation(varsigma_inf, i=0, j=1):
    """``Corr[x_ii, x_jj]`` of a matrix gamma law: ``vs_ij^2 / (vs_ii vs_jj)``."""
    vs = np.asarray(varsigma_inf)
    return float(vs[i, j] ** 2 / (vs[i, i] * vs[j, j]))


def estimate_mom(panel, min_obs=30, ddof=1):
    """Method-of-moments estimate of ``(beta, varsigma_inf)`` from a weekly panel.

    Raises
    ------
    DegenerateSample
        Too few weeks, a nonpositive mean or variance, or a negative cross covariance.
    """
    x = panel.totals if isinstance(panel, WeeklyPanel) else np.asarray(panel, dtype=float)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValidationError("panel must be a 2-D array of weekly totals")
    if x.shape[0] < min_obs:
        raise DegenerateSample(f"need at least {min_obs} observations, got {x.shape[0]}")
    beta, vs, mu, var, cov, per_line, corr = _mom(x, ddof)
    n = x.shape[1]
    return MatrixGammaEstimate(
        beta_hat=beta, varsigma_inf_hat=vs, means=mu, variances=var, covariance=cov,
        per_line_beta=per_line,
        implied_correlation=implied_correlation(vs) if n > 1 else float("nan"),
        sample_correlation=float(corr[0, 1]) if n > 1 else float("nan"),
        n_obs=x.shape[0])


class MatrixGammaMoM(BaseEstimator):
    """Method-of-moments estimator of the stationary matrix gamma law.

    Parameters
    ----------
    min_obs : int, default=30
        Smallest accepted sample size.
    ddof : int, default=1
        Delta degrees of freedom of the sample (co)variances.

    Attributes
    ----------
    beta_ : float
    varsigma_inf_ : ndarray of shape (n_lines, n_lines)
    estimate_ : MatrixGammaEstimate
    n_features_in_ : int
    """

    def __init__(self, min_obs=30, ddof=1):
        self.min_obs = min_obs
        self.ddof = ddof

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=1)
        if np.any(X < 0):
            raise ValueError("weekly totals must be nonnegative")
        est = estimate_mom(X, self.min_obs, self.ddof)
        self.estimate_ = est
        self.beta_ = est.beta_hat
        self.varsigma_inf_ = est.varsigma_inf_hat
        self.n_features_in_ = X.shape[1]
        return self

    def mean(self):
        """Model mean ``beta * varsigma_inf``."""
        check_is_fitted(self, "estimate_")
        return self.beta_ * self.varsigma_inf_


# ---------------------------------------------------------------------------
# model versus empirical tail measures


@dataclass
class RiskRow:
    label: str
    model: float
    empirical: float
    model_threshold: float
    empirical_threshold: float


def _tail_moments_model(beta, vs, theta, level, cfg):
    from .riskmeasures import MatrixGammaProvider
    prov = MatrixGammaProvider(beta, vs, theta)
    var = inversion.quantile(prov, level, cfg)
    table = inversion.truncated_moment_table(prov, 2, (), var, cfg)
    den = table.values[0]
    return var, table.values[1] / den, table.values[2] / den


def _tail_moments_empirical(y, level):
    q = float(np.quantile(y, level))
    tail = y[y > q]
    if tail.size == 0:
        raise DegenerateSample("no observation above the empirical quantile")
    return q, float(tail.mean()), float((tail ** 2).mean())


def matrix_gamma_risk_report(estimate, panel, quantile_level=0.95, cfg=None):
    """First and second tail moments of each line and of their sum, model vs data.

    Model thresholds are model quantiles; empirical ones are sample quantiles.
    The model column is scale dependent, so inversion tolerances are relative
    to the square of the fitted mean.
    """
    x = panel.totals if isinstance(panel, WeeklyPanel) else np.asarray(panel, dtype=float)
    if not estimate.positive_definite:
        raise DegenerateSample("fitted varsigma_inf is not positive definite")
    n = x.shape[1]
    scale = float(np.max(estimate.beta_hat * np.diag(estimate.varsigma_inf_hat)))
    if cfg is None:
        cfg = InversionConfig(tol=1e-10 * max(1.0, scale) ** 2)
    rows = []
    payoffs = [(np.diag(np.eye(n)[i]), x[:, i], f"x{i + 1}{i + 1}") for i in range(n)]
    payoffs.append((np.eye(n), x.sum(axis=1), "s"))
    for theta, y, name in payoffs:
        mvar, m1, m2 = _tail_moments_model(estimate.beta_hat, estimate.varsigma_inf_hat,
                                           theta, quantile_level, cfg)
        evar, e1, e2 = _tail_moments_empirical(y, quantile_level)
        rows.append(RiskRow(f"E[{name} | {name} > VaR]", float(m1), e1, mvar, evar))
        rows.append(RiskRow(f"E[{name}^2 | {name} > VaR]", float(m2), e2, mvar, evar))
    return rows


def bootstrap_mom(panel, n_boot=500, level=0.95, seed=0, ddof=1):
    """Percentile bootstrap intervals for ``beta`` and the entries of ``varsigma_inf``.

    Resamples with a negative cross covariance are skipped and counted.

    Returns
    -------
    dict
        ``beta`` and ``varsigma_inf`` map to ``(lower, upper)`` bounds; the
        matrix bounds are arrays. ``skipped`` counts discarded resamples.
    """
    x = panel.totals if isinstance(panel, WeeklyPanel) else np.asarray(panel, dtype=float)
    rng = np.random.default_rng(seed)
    betas, mats, skipped = [], [], 0
    for _ in range(n_boot):
        idx = rng.integers(0, len(x), len(x))
        try:
            beta, vs, *_ = _mom(x[idx], ddof)
        except DegenerateSample:
            skipped += 1
            continue
        betas.append(beta)
        mats.append(vs)
    if not betas:
        raise DegenerateSample("every bootstrap resample was degenerate")
    q = [(1 - level) / 2 * 100, (1 + level) / 2 * 100]
    b_lo, b_hi = np.percentile(betas, q)
    m_lo, m_hi = np.percentile(np.array(mats), q, axis=0)
    return {"beta": (float(b_lo), float(b_hi)), "varsigma_inf": (m_lo, m_hi),
            "skipped": skipped}


def synthetic_fixture(n_obs=200, beta=4.0, varsigma_inf=((2.0, 1.4), (1.4, 3.0)), seed=7):
    """Weekly panel drawn from a known matrix gamma law (integer ``beta``).

    Returns
    -------
    totals : ndarray of shape (n_obs, 2)
        Diagonal entries of the draws.
    truth : dict
        ``beta`` and ``varsigma_inf`` used.
    """
    from .mcsim import sample_stationary
    vs = np.asarray(varsigma_inf, dtype=float)
    draws = sample_stationary(beta, vs, n_obs, seed=seed)
    totals = np.stack([draws[:, i, i] for i in range(vs.shape[0])], axis=1)
    return totals, {"beta": beta, "varsigma_inf": vs}


def write_fixture_csv(path, n_obs=200, seed=7, start=_dt.date(2000, 1, 3)):
    """Write the synthetic fixture as daily-dated claims, one row per week."""
    totals, truth = synthetic_fixture(n_obs=n_obs, seed=seed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Date", "Building", "Contents"])
        for k, row in enumerate(totals):
            day = start + _dt.timedelta(weeks=k)
            w.writerow([day.isoformat(), f"{row[0]:.10g}", f"{row[1]:.10g}"])
    return truth


FIXTURE_TRUTH = {"beta": 4.0, "varsigma_inf": ((2.0, 1.4), (1.4, 3.0))}


def fixture_path():
    """Bundled 200-week synthetic claims file; ground truth in :data:`FIXTURE_TRUTH`."""
    return Path(str(resources.files("wishrisk") / "data" / "synthetic_claims.csv"))


__all__: Sequence[str] = [
    "ClaimsRecord", "WeeklyPanel", "MatrixGammaEstimate", "MatrixGammaMoM", "RiskRow",
    "ingest_csv", "aggregate_weekly", "estimate_mom", "implied_correlation",
    "matrix_gamma_risk_report", "bootstrap_mom", "synthetic_fixture", "write_fixture_csv",
    "fixture_path", "FIXTURE_TRUTH",
]
