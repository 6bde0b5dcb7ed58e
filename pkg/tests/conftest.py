"""Shared pytest wiring for the acceptance gate: criterion tests record one
verdict line each, and the terminal summary replays them after the run so
the verdicts are visible whether or not capture swallowed the prints."""

import pytest

_LINES: list[str] = []


@pytest.fixture
def acceptance():
    def record(line: str) -> None:
        _LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
