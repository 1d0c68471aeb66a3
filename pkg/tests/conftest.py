from pathlib import Path

import numpy as np
import pytest

from dr_ate import _backend

DATA = Path(__file__).parent / "data"

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES = []


@pytest.fixture
def fixture8_path():
    return DATA / "fixture8.csv"


@pytest.fixture(params=_backend.available_backends())
def backend(request):
    previous = _backend.use_backend(request.param)
    yield request.param
    _backend.use_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
