import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_acceptance_lines = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_acceptance_lines] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; printed again in the terminal summary."""
    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        request.config.stash[_acceptance_lines].append((number, line))
        return passed
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_acceptance_lines, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
