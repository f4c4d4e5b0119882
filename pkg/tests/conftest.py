import numpy as np
import pytest

from anchorcal.core import LabeledDataset, ScoreRecord

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_ds():
    recs = [
        ScoreRecord("a", {"entropy": 2.0, "msp_log": -0.2}, 1),
        ScoreRecord("b", {"entropy": 0.5, "msp_log": -1.5}, 0),
        ScoreRecord("c", {"entropy": 1.0, "msp_log": -0.7}, 1),
    ]
    return LabeledDataset(tuple(recs), "unit", 7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for the terminal summary, then assert."""

    def report(num, title, ok, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {num:>2}. {title}: {detail}")
        print(ACCEPTANCE_LINES[-1])
        assert ok, detail

    return report
