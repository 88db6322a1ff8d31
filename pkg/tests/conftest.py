"""Shared pytest plumbing: the acceptance verdict echo.

Acceptance tests record one PASS/FAIL line per criterion; echoing them in
the terminal summary keeps the verdicts visible even though pytest
captures per-test stdout.  Tests reach the recorder through the `verdict`
fixture so the lines land in this plugin module regardless of how the
test module itself was imported.
"""

import pytest

_VERDICTS = []


def record_verdict(line: str) -> None:
    _VERDICTS.append(line)


@pytest.fixture(scope="session")
def verdict():
    return record_verdict


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
