import numpy as np
import pytest

from vqpm.qubo import QuboInstance

_CRITERIA: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    _CRITERIA.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def small_q():
    """q00 = 1, q11 = 0.5, q01 = -3."""
    return QuboInstance.from_terms(2, {(0, 0): 1.0, (1, 1): 0.5, (0, 1): -3.0})


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
