import numpy as np
import pytest

from hcgas.partition_function import LevelTables, build_tables

_TABLE_CACHE: dict = {}

# one line per acceptance criterion, echoed after the run (see test_acceptance)
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def get_tables():
    """Session-cached LevelTables factory; builds are the slow part of the suite."""

    def factory(n: int, beta: float, d: int, depth_pad: int = 8) -> LevelTables:
        key = (n, beta, d, depth_pad)
        if key not in _TABLE_CACHE:
            _TABLE_CACHE[key] = build_tables(n, beta, d, depth_pad)
        return _TABLE_CACHE[key]

    return factory


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
