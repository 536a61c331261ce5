import numpy as np
import pytest

from grouptest.design import ItemSet, TestDesign, compute_outcomes

# Worked instance: items a, b, c, d = 0, 1, 2, 3; pools {c}, {a,c}, {b,d}; K = {a, b}.
A, B, C, D = range(4)


@pytest.fixture
def worked():
    design = TestDesign(np.array([[0, 0, 1, 0],
                                  [1, 0, 1, 0],
                                  [0, 1, 0, 1]], dtype=bool))
    k = ItemSet.of([A, B])
    return design, k, compute_outcomes(design, k)


_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else outcome.upper():8s} {name}")
