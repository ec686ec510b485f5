import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_LINES = []


@pytest.fixture
def criterion(capsys):
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def report(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
