import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for an acceptance criterion.

    A test that raises before recording still gets a FAIL line.
    """
    lines = request.config._acceptance_lines
    seen = []

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        seen.append(line)
        lines.append(line)
        print(line)
        return ok

    yield record
    if not seen:
        lines.append(f"{request.node.name}: FAIL  (raised before reporting)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
