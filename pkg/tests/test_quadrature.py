import math

import numpy as np
import pytest

from wishrisk import quadrature


def test_oscillatory_integral():
    # int_0^20 cos(5u) e^{-u/4} du
    f = lambda u: np.cos(5 * u) * np.exp(-u / 4)  # noqa: E731
    exact = (0.25 + math.exp(-5) * (5 * math.sin(100) - 0.25 * math.cos(100))) / (25 + 1 / 16)
    r = quadrature.integrate(f, [0.0, 20.0], tol=1e-13)
    assert r.converged
    assert r.value == pytest.approx(exact, abs=1e-12)
    assert r.abs_error <= 1e-10


def test_vector_valued_and_breakpoints():
    f = lambda u: np.stack([u ** 2, np.sqrt(u)], axis=-1)  # noqa: E731
    r = quadrature.integrate(f, [0.0, 0.5, 1.0], tol=1e-12)
    assert np.allclose(r.value, [1 / 3, 2 / 3], atol=1e-10)


def test_complex_integrand():
    r = quadrature.integrate(lambda u: np.exp(1j * u), [0.0, math.pi], tol=1e-13)
    assert r.value == pytest.approx(2j, abs=1e-12)
