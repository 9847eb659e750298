import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "kmslab", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("kmslab")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    """Collects PASS/FAIL lines, repeated in the terminal summary even when output is captured."""
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
