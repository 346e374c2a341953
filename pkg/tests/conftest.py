import pytest

from primegauge.engine import PrimeIndex, build

from oracles import naive_pi_table


@pytest.fixture(scope="session")
def small_table():
    return build(10**4 + 2)


@pytest.fixture(scope="session")
def naive_pi():
    return naive_pi_table(10**4 + 2)


@pytest.fixture(scope="session")
def table_1e5():
    return build(10**5)


@pytest.fixture(scope="session")
def big_table():
    """Enough for the ratio scan to 10^7 and the deviation series to L = 1436."""
    return build(2 * 10**7)


@pytest.fixture(scope="session")
def big_index(big_table):
    return PrimeIndex(big_table)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
