import numpy as np
import pytest

from fmgsc.channel import PowerDelayProfile, frequency_response, sample_channel

ACCEPTANCE_LINES = []


def random_response(rng, n=16, taps=8, noise_var=1.0, decay=1.0):
    ch = sample_channel(PowerDelayProfile(min(taps, n), decay), rng)
    return frequency_response(ch, n, noise_var)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
