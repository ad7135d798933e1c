import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from wishrisk import matcore
from wishrisk.exceptions import SingularMatrixError, ValidationError


def taylor_expm(a, terms=60):
    out = np.eye(len(a), dtype=np.result_type(a, float))
    term = out.copy()
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


def stable_matrix(rng, n=2):
    a = 0.3 * rng.normal(size=(n, n))
    shift = np.linalg.eigvals(a).real.max() + rng.uniform(0.05, 1.0)
    return a - shift * np.eye(n)


def test_expm_matches_taylor_series(rng):
    for _ in range(10):
        a = 0.5 * rng.normal(size=(3, 3))
        assert np.allclose(matcore.expm(a), taylor_expm(a), rtol=1e-13, atol=1e-14)


def test_expm_diagonal_and_rejects_nan():
    d = np.diag([0.3, -1.2])
    assert np.allclose(matcore.expm(d), np.diag(np.exp([0.3, -1.2])), rtol=1e-15)
    with pytest.raises(ValidationError):
        matcore.expm(np.array([[np.nan, 0], [0, 1]]))


@given(m=st.floats(-2.0, -0.01), s=st.floats(0.01, 2.0), t=st.floats(0.0, 20.0))
@settings(max_examples=50, deadline=None)
def test_varsigma_scalar_closed_form(m, s, t):
    got = matcore.varsigma(t, np.array([[m]]), np.array([[s]]))[0, 0]
    want = s * s * math.expm1(2 * m * t) / (2 * m)
    assert got == pytest.approx(want, rel=1e-10, abs=1e-15)


def test_varsigma_matches_direct_integral(rng):
    for _ in range(5):
        m = stable_matrix(rng)
        sig = np.array([[0.3, 0.1], [0.1, 0.2]])
        s2 = sig @ sig
        t = rng.uniform(0.1, 5)
        direct, _ = integrate.quad_vec(
            lambda u: matcore.expm(u * m) @ s2 @ matcore.expm(u * m).T, 0, t, epsabs=1e-14)
        assert np.allclose(matcore.varsigma(t, m, sig), direct, rtol=1e-10, atol=1e-14)


def test_varsigma_zero_and_negative_time():
    m = np.diag([-0.1, -0.2])
    assert np.all(matcore.varsigma(0.0, m, np.eye(2)) == 0)
    with pytest.raises(ValidationError):
        matcore.varsigma(-1.0, m, np.eye(2))


def test_lyapunov_residual_and_limit(rng):
    for _ in range(10):
        m = stable_matrix(rng, 3)
        c = rng.normal(size=(3, 3))
        rhs = c @ c.T
        x = matcore.lyapunov_solve(m, rhs)
        assert np.allclose(m @ x + x @ m.T, -rhs, atol=1e-11)
        assert np.allclose(x, x.T)
    m = np.diag([-0.01, -0.02])
    sig = np.array([[0.06, 0.02], [0.02, 0.04]])
    x = matcore.lyapunov_solve(m, sig @ sig)
    assert np.allclose(matcore.varsigma(3000.0, m, sig), x, rtol=1e-10)


def test_unstable_drift_rejected():
    with pytest.raises(ValidationError, match="negative real part"):
        matcore.lyapunov_solve(np.diag([0.1, -0.2]), np.eye(2))


def test_vec_unvec_kron_sum(rng):
    m = rng.normal(size=(3, 3))
    x = rng.normal(size=(3, 3))
    assert np.allclose(matcore.unvec(matcore.kron_sum(m) @ matcore.vec(x), 3), m @ x + x @ m.T)
    assert np.array_equal(matcore.unvec(matcore.vec(x), 3), x)


def test_solve_inv_det(rng):
    a = rng.normal(size=(4, 4)) + 4 * np.eye(4)
    b = rng.normal(size=4)
    assert np.allclose(a @ matcore.solve(a, b), b)
    assert np.allclose(matcore.inv(a) @ a, np.eye(4), atol=1e-13)
    assert matcore.det(a) == pytest.approx(np.prod(np.linalg.eigvals(a)).real)
    assert matcore.logdet(a) == pytest.approx(np.log(matcore.det(a) + 0j))
    with pytest.raises(SingularMatrixError):
        matcore.solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))


def test_as_symmetric_checks():
    with pytest.raises(ValidationError, match="symmetric"):
        matcore.as_symmetric([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValidationError, match="square"):
        matcore.as_symmetric(np.ones((2, 3)))
    assert matcore.is_positive_definite(np.eye(2))
    assert not matcore.is_positive_definite(np.diag([1.0, -1.0]))
