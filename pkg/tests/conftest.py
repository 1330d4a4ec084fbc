import itertools
from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"

PAPER_SETS = [(2, 4, 5, 6, 9), (1, 2, 3, 4, 5, 6, 7), (1, 2, 5, 7, 9, 11, 15, 16, 18)]


def all_spins(n):
    """Every +/-1 vector of length n, in itertools order (independent of the kernels)."""
    return [np.array(s, dtype=np.int8) for s in itertools.product((1, -1), repeat=n)]


def double_sum_energy(s, w):
    """Plain-Python reference for -sum_i sum_j s_i s_j w_ij."""
    n = len(s)
    return -sum(int(s[i]) * int(s[j]) * float(w[i][j]) for i in range(n) for j in range(n))


def pixel_sum(s, w):
    """Plain-Python reference detector: sum of w over pixels where spins disagree."""
    n = len(s)
    return sum(float(w[i][j]) for i in range(n) for j in range(n) if s[i] != s[j])


@pytest.fixture
def unit_triangle():
    from evospi.problems import MaxCutInstance

    return MaxCutInstance(np.ones((3, 3)) - np.eye(3))


ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
