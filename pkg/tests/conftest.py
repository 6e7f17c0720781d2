import pytest

from mlaucb.estimator import ArmStatistics

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def _stats(pairs, offline):
    s = ArmStatistics()
    for r, h in pairs:
        s.observe(r, h)
    return s.ingest_offline(offline)


D1_PAIRS = [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]
D1_OFFLINE = [2.0, 2.0]
D2_PAIRS = [(0.0, 0.0), (2.0, 2.0), (1.0, 4.0)]
D2_OFFLINE = [4.0]


@pytest.fixture
def d1():
    return _stats(D1_PAIRS, D1_OFFLINE)


@pytest.fixture
def d2():
    return _stats(D2_PAIRS, D2_OFFLINE)
