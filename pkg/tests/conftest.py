import time

import pytest

_CRITERIA: dict = {}


class CriterionReport:
    """Records one acceptance criterion and prints a single pass/fail line."""

    def __init__(self, number: int, title: str, budget: float):
        self.number, self.title, self.budget = number, title, budget
        self.start = time.perf_counter()

    def finish(self, ok: bool, detail: str) -> None:
        elapsed = time.perf_counter() - self.start
        in_budget = elapsed <= self.budget
        passed = bool(ok) and in_budget
        line = (f"criterion {self.number:2d} {'PASS' if passed else 'FAIL'}: {self.title} | "
                f"{detail} | {elapsed:.1f} s (budget {self.budget:g} s)")
        _CRITERIA[self.number] = line
        print(line)
        assert ok, line
        assert in_budget, line


@pytest.fixture
def criterion():
    return CriterionReport


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
