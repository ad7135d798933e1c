import numpy as np
import pytest

from wishrisk import InversionConfig, example_params, zero_dependence_equivalent
from wishrisk.riskmeasures import SpectralPayoff


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical checks")


@pytest.fixture(scope="session")
def params():
    return example_params()


@pytest.fixture(scope="session")
def params_zero(params):
    return zero_dependence_equivalent(params)


@pytest.fixture(scope="session")
def cfg():
    return InversionConfig(tol=1e-10)


@pytest.fixture(scope="session")
def payoffs():
    return {"x11": SpectralPayoff.loss(0, 2), "x22": SpectralPayoff.loss(1, 2),
            "x12": SpectralPayoff.covariance(0, 1, 2), "s": SpectralPayoff.portfolio(2)}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from _acceptance import LINES
    if LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(LINES, key=lambda s: float(s.split()[2].rstrip("abc:") or 0)):
            terminalreporter.write_line(line)
