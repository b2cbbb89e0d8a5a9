"""Shared pytest plumbing.

The acceptance tests each emit one "criterion N: PASS/FAIL - ..." line.
Those lines are collected on the pytest config object and replayed in a
terminal section after the run, where output capturing cannot swallow them.
"""

import pytest


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Callable that records (and prints) one acceptance result line."""

    def log(line):
        request.config.acceptance_lines.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
