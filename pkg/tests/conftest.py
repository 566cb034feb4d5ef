import pytest

from vbmodem.freqplan import default_plan

# filled by test_acceptance; echoed after the run so it lands in the log
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def plan():
    return default_plan()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
