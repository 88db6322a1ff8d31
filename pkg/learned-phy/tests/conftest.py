import pytest

_VERDICTS = []


def record_verdict(line: str) -> None:
    _VERDICTS.append(line)


@pytest.fixture(scope="session")
def verdict():
    return record_verdict


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _VERDICTS:
        terminalreporter.section("learned-transceiver acceptance")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
