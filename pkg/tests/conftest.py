import functools

import pytest

from epigame import solve_nash

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def cached_nash(scenario):
    return solve_nash(scenario)


@pytest.fixture(scope="session")
def nash():
    """solve_nash with results shared across the whole session."""
    return cached_nash


@pytest.fixture(scope="session")
def acceptance_report():
    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
