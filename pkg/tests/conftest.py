from __future__ import annotations

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


class SuiteCache:
    """Runs each verification suite at most once per session."""

    def __init__(self):
        self._reports = {}

    def get(self, suite: str, budget: int = 100_000, seed: int = 1, negative_control: bool = False):
        from rmtweights.verify import run_suite

        key = (suite, budget, seed, negative_control)
        if key not in self._reports:
            self._reports[key] = run_suite(suite, budget, seed, negative_control)
        return self._reports[key]

    def by_name(self, suite: str, **kw):
        return {r.test_name: r for r in self.get(suite, **kw)}


@pytest.fixture(scope="session")
def suites():
    return SuiteCache()


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
