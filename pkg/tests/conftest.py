import hypothesis
import numpy as np
import pytest

from otaest.model import GaussianLocation, SystemConfig

hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=20, deadline=None)
hypothesis.settings.load_profile("ci")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gauss():
    return GaussianLocation(sigma_sq=1.0, B=1.0)


@pytest.fixture
def cfg_gauss():
    return SystemConfig(n=10, d=2, P=1.0, sigma0_sq=1.0)
