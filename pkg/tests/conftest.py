import numpy as np
import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20150612)


@pytest.fixture
def record_criterion():
    def record(name, passed, detail="", skipped=False):
        status = "SKIP" if skipped else ("PASS" if passed else "FAIL")
        ACCEPTANCE_LINES.append(f"[{status}] {name}: {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
