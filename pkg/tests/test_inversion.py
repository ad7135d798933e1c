import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from wishrisk import inversion
from wishrisk.exceptions import ConvergenceError, ValidationError
from wishrisk.inversion import FunctionProvider, InversionConfig
from wishrisk.riskmeasures import WishartProvider

CFG = InversionConfig(tol=1e-11)


def gamma_provider(k, scale):
    return FunctionProvider(lambda z: (1 - scale * np.asarray(z, dtype=complex)) ** (-k),
                            domain=(-math.inf, 1 / scale))


def gamma_tail_moment(k, scale, p, y):
    """``E[Y^p 1{Y > y}]`` for ``Y ~ Gamma(k, scale)``."""
    return scale ** p * math.exp(special.gammaln(k + p) - special.gammaln(k)) \
        * special.gammaincc(k + p, y / scale)


@given(k=st.floats(1.0, 6.0), scale=st.floats(0.2, 3.0), u=st.floats(0.05, 0.99))
@settings(max_examples=25, deadline=None)
def test_gamma_truncated_moments(k, scale, u):
    y = stats.gamma(k, scale=scale).ppf(u)
    prov = gamma_provider(k, scale)
    table = inversion.truncated_moment_table(prov, 3, (), y, CFG)
    for p in range(4):
        want = gamma_tail_moment(k, scale, p, y)
        assert table.values[p] == pytest.approx(want, rel=1e-7, abs=1e-12)


def test_zero_threshold_is_full_mass():
    prov = gamma_provider(2.5, 0.7)
    assert inversion.tail_probability(prov, 0.0, CFG).value == pytest.approx(1.0, abs=1e-9)


def test_slow_decay_is_rejected():
    # envelope ~ u^-1.8: below the accepted decay exponent of 2
    with pytest.raises(ConvergenceError, match="decay"):
        inversion.truncated_moment_1d(gamma_provider(0.8, 1.0), 0, 1.0, CFG)


def test_unit_exponent_uses_fourier_tail():
    r = inversion.truncated_moment_1d(gamma_provider(1.0, 1.0), 0, 0.7, CFG)
    assert r.value == pytest.approx(math.exp(-0.7), abs=1e-11)
    assert any("oscillatory tail" in w for w in r.warnings)


def test_damping_sign_invariance():
    prov = gamma_provider(3.0, 0.5)
    y = 2.0
    ref = gamma_tail_moment(3.0, 0.5, 1, y)
    for alpha in (-3.0, -0.5, 0.4, 1.2):
        r = inversion.truncated_moment_1d(prov, 1, y, CFG, alpha=alpha)
        assert r.value == pytest.approx(ref, rel=1e-8)


def test_cdf_complements_tail():
    prov = gamma_provider(2.0, 1.0)
    for y in (0.3, 1.0, 4.0):
        total = inversion.cdf(prov, y, CFG).value + inversion.tail_probability(prov, y, CFG).value
        assert total == pytest.approx(1.0, abs=1e-9)
        assert inversion.cdf(prov, y, CFG).value == pytest.approx(stats.gamma(2.0).cdf(y), abs=1e-9)


def test_exponential_quantile():
    prov = gamma_provider(1.0, 1.0)
    assert inversion.quantile(prov, 1 - math.exp(-1), CFG) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ValidationError):
        inversion.quantile(prov, 1.5, CFG)


def test_raw_moments_by_cauchy_integral():
    prov = gamma_provider(2.0, 0.5)
    for p in range(5):
        want = 0.5 ** p * math.gamma(2 + p) / math.gamma(2)
        assert inversion.raw_moment(prov, p) == pytest.approx(want, rel=1e-10)


def test_independent_weight_factorizes():
    ky, sy, kz, sz = 2.0, 0.8, 3.0, 0.4
    mz = [sz ** q * math.gamma(kz + q) / math.gamma(kz) for q in range(3)]
    base = gamma_provider(ky, sy)
    prov = FunctionProvider(base.mgf, base.domain(),
                            weighted=lambda z, q: mz[q[0]] * base.mgf(z))
    for p, q in [(0, 1), (1, 1), (2, 2)]:
        r = inversion.truncated_cross_moment_1d(prov, p, (q,), 1.5, CFG)
        assert r.value == pytest.approx(mz[q] * gamma_tail_moment(ky, sy, p, 1.5), rel=1e-8)


def test_real_support_normal():
    prov = FunctionProvider(lambda z: np.exp(0.5 * np.asarray(z, dtype=complex) ** 2),
                            support="real")
    for y in (-1.0, 0.0, 1.7):
        assert inversion.tail_probability(prov, y, CFG).value == pytest.approx(
            stats.norm.sf(y), abs=1e-9)
        r = inversion.truncated_moment_1d(prov, 1, y, CFG)
        assert r.value == pytest.approx(stats.norm.pdf(y), abs=1e-9)


def test_median_of_symmetric_law_is_location():
    loc = 0.3
    prov = FunctionProvider(
        lambda z: np.exp(loc * np.asarray(z, dtype=complex) + 0.5 * np.asarray(z) ** 2),
        support="real")
    assert inversion.quantile(prov, 0.5, CFG) == pytest.approx(loc, abs=1e-8)


CROSS_CASES = [("x11", "x22", 0, 1), ("x11", "x22", 1, 1), ("x11", "x22", 2, 1),
               ("x11", "x12", 0, 1), ("x11", "x12", 1, 2), ("s", "x11", 0, 1),
               ("s", "x11", 1, 1), ("s", "x22", 0, 2), ("s", "x22", 2, 1),
               ("s", "x12", 1, 1), ("x11", "x22", 0, 3), ("s", "x11", 3, 1)]
THRESHOLDS = {"x11": 1.0, "s": 1.3}


def cross_moment_pair(params, payoffs, cond, target, p, q):
    prov = WishartProvider(params, payoffs[cond].theta, 1.0, [payoffs[target].theta])
    y = THRESHOLDS[cond]
    one = inversion.truncated_cross_moment_1d(prov, p, (q,), y, InversionConfig(tol=1e-10))
    two = inversion.truncated_cross_moment_2d(prov, p, q, y, InversionConfig(tol=1e-9))
    return one.value, two.value


@pytest.mark.slow
@pytest.mark.parametrize("cond,target,p,q", CROSS_CASES)
def test_one_and_two_dimensional_routes_agree(params, payoffs, cond, target, p, q):
    one, two = cross_moment_pair(params, payoffs, cond, target, p, q)
    assert two == pytest.approx(one, rel=1e-4)
