import os
import pathlib

import numpy as np
import pytest

ACCEPTANCE_LINES = []

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def record_criterion(number, passed, detail, skipped=False):
    status = "SKIP" if skipped else ("PASS" if passed else "FAIL")
    line = f"criterion {number:>2}: {status}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def data_dir():
    """Directory holding user-supplied original datasets, or None."""
    d = os.environ.get("MANIFOLD_MEANS_DATA")
    return pathlib.Path(d) if d else None
