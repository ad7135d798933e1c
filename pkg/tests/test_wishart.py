import numpy as np
import pytest
from scipy import stats

from wishrisk import WishartParams, example_params, wishart, zero_dependence_equivalent
from wishrisk.exceptions import DomainError, ValidationError

from _fd import central_derivative
from _models import mean, mgf_and_first_derivative, random_config

E11 = np.diag([1.0, 0.0])
E22 = np.diag([0.0, 1.0])
E12 = np.array([[0.0, 0.5], [0.5, 0.0]])


def test_stationary_mean_solves_lyapunov(params):
    x = params.x0
    rhs = -params.beta * params.sigma2
    assert np.allclose(params.m @ x + x @ params.m.T, rhs, atol=1e-14)


def test_mgf_at_zero_is_one(params):
    assert wishart.mgf(params, 1.0, np.zeros((2, 2))).value == pytest.approx(1.0)


def test_first_derivative_closed_form(rng):
    for _ in range(20):
        p, t, th0, th1 = random_config(rng)
        phi, dphi = mgf_and_first_derivative(p, t, th0, th1)
        jet = wishart.mgf_jet(p, t, th0, th1, 1)
        assert jet.value.real == pytest.approx(phi, rel=1e-12)
        assert jet.derivative((1,)).real == pytest.approx(dphi, rel=1e-10)


def test_higher_derivatives_finite_differences(rng):
    for _ in range(8):
        p, t, th0, th1 = random_config(rng)
        jet = wishart.mgf_jet(p, t, th0, th1, 4)
        f = lambda h: wishart.mgf(p, t, th0 + h * th1).value.real  # noqa: E731
        h = 0.1
        for k in range(1, 5):
            fd = central_derivative(f, k, h)
            assert jet.derivative((k,)).real == pytest.approx(fd, rel=1e-5)


def test_jet_mean_equals_first_moment(params):
    jet = wishart.mgf_jet(params, 1.0, np.zeros((2, 2)), [E11, E12, E22], 1)
    mu = mean(params, 1.0)
    assert jet.derivative((1, 0, 0)).real == pytest.approx(mu[0, 0], rel=1e-12)
    assert jet.derivative((0, 1, 0)).real == pytest.approx(mu[0, 1], rel=1e-12)
    assert jet.derivative((0, 0, 1)).real == pytest.approx(mu[1, 1], rel=1e-12)
    assert np.allclose(params.mean(1.0), mu, rtol=1e-12)


def test_bru_closed_form_matches_general_omega_quadrature(params, rng):
    general = WishartParams(m=params.m, sigma=params.sigma, x0=params.x0,
                            omega=params.beta * params.sigma2)
    for t in (0.3, 1.0, 4.0):
        th = rng.normal(size=(2, 2))
        theta = 5 * (th + th.T) + 3j * np.eye(2)
        a = wishart.mgf(params, t, theta).value
        b = wishart.mgf(general, t, theta).value
        assert abs(a - b) <= 1e-9 * abs(a)


def test_two_date_reductions(params):
    t0, t1 = 1.0, 1.5
    th = np.array([[0.4, 0.1], [0.1, -0.3]]) + 0.7j * np.eye(2)
    zero = np.zeros((2, 2))
    for conv in wishart.TWO_DATE_CONVENTIONS:
        got = wishart.mgf_two_dates(params, t0, t1, th, zero, convention=conv).value
        assert got == pytest.approx(wishart.mgf(params, t0, th).value, rel=1e-12)
    got = wishart.mgf_two_dates(params, t0, t1, zero, th).value
    assert got == pytest.approx(wishart.mgf(params, t1, th).value, rel=1e-12)


def test_as_printed_differs_from_tower(params):
    th = 0.5 * np.eye(2)
    a = wishart.mgf_two_dates(params, 1.0, 1.5, th, th).value
    b = wishart.mgf_two_dates(params, 1.0, 1.5, th, th, convention="as_printed").value
    assert abs(a - b) > 1e-6


def test_stationary_law_is_gamma_on_diagonal(params):
    vs = params.varsigma_inf
    beta = params.beta
    z = np.array([0.5, 2.0 + 1j])
    got = np.array([wishart.stationary_mgf(beta, vs, zz * E11) for zz in z])
    want = (1 - 2 * z * vs[0, 0]) ** (-beta / 2)
    assert np.allclose(got, want, rtol=1e-12)
    far = wishart.mgf(params, 4000.0, 0.5 * E11).value
    assert far == pytest.approx(want[0], rel=1e-8)
    draws = stats.wishart(df=beta, scale=vs).rvs(4000, random_state=1)
    assert np.mean(draws[:, 0, 0]) == pytest.approx(beta * vs[0, 0], rel=0.05)


def test_domain_margin_decreases_to_boundary(params):
    vs = params.varsigma(1.0)
    edge = 1 / (2 * vs[0, 0])
    zs = np.linspace(0, 0.99 * edge, 30)
    margins = [wishart.domain_margin(params, 1.0, z * E11) for z in zs]
    assert np.all(np.diff(margins) < 0)
    with pytest.raises(DomainError):
        wishart.mgf(params, 1.0, 1.01 * edge * E11)


def test_beta_below_n_plus_one_rejected(params):
    with pytest.raises(ValidationError, match="beta >= n \\+ 1"):
        WishartParams(m=params.m, sigma=params.sigma, beta=2.5)
    with pytest.raises(ValidationError, match="positive semidefinite"):
        WishartParams(m=params.m, sigma=params.sigma, omega=2.0 * params.sigma2)
    with pytest.raises(ValidationError, match="exactly one"):
        WishartParams(m=params.m, sigma=params.sigma)


def test_zero_dependence_equivalent(params):
    z = zero_dependence_equivalent(params)
    assert z.sigma[0, 1] == 0
    assert np.allclose(np.diag(z.sigma2), np.diag(params.sigma2))
    qz = wishart.quadratic_covariations(z)
    assert qz["x11,x22"] == 0
    q = wishart.quadratic_covariations(params, z.x0)
    assert qz["x11,x11"] == pytest.approx(q["x11,x11"])
    assert qz["x22,x22"] == pytest.approx(q["x22,x22"])


def test_example_x0():
    x0 = example_params().x0
    assert np.allclose(x0, [[0.84, 0.3266], [0.3266, 0.22]], atol=5e-3)
