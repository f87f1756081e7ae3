import numpy as np
import pytest

from glauber_p import StateModel, sample_quadratures

A1_MODEL = StateModel(nbar=1.11, eta=0.60, w=1.0)
A3_MODEL = StateModel(nbar=3.71, eta=0.62, w=0.81)

_CRITERIA = []


def record_criterion(name, passed, detail):
    _CRITERIA.append((name, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{name:4s} {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def a1_data():
    return sample_quadratures(A1_MODEL, 100_000, seed=42)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240607)
