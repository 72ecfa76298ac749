import numpy as np
import pytest

# one (criterion, passed, detail) entry per acceptance criterion, filled by
# tests/test_acceptance.py and printed at the end of the run
ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def acceptance(capsys):
    """Record and print a PASS/FAIL line, then fail the test if needed."""

    def report(criterion, passed, detail):
        line = f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        assert passed, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
