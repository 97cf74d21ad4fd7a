import warnings

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    """Remember one acceptance line; printed again in the terminal summary."""
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _quiet_padding_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*exceeds null-space dimension.*")
        yield
