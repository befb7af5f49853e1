import numpy as np
import pytest

from mapcs.core import ProblemInstance, SensingMatrix, SparseSignal

CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(number, title, passed, detail)``."""
    def record(number, title, passed, detail=""):
        CRITERIA.append((number, title, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(CRITERIA, key=lambda c: str(c[0])):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} -- {detail}")


@pytest.fixture
def hand_instance():
    F = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    return ProblemInstance.from_truth(SensingMatrix(F), SparseSignal([1.0, 0.0, 0.0]))
