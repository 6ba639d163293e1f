import numpy as np
import pytest

from socodes.codebook import enumerate_codebook, make_spec


@pytest.fixture(scope="session")
def spec_10_5():
    return make_spec(10, 5)


@pytest.fixture(scope="session")
def book_10_5(spec_10_5):
    return enumerate_codebook(spec_10_5)


@pytest.fixture(scope="session")
def spec_12_6_q7():
    return make_spec(12, 6, q=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""

    def _report(label: str, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'} {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
