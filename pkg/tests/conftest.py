import pytest

# criterion number -> (passed, detail), filled in by test_acceptance.py
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def record():
    def _record(num, name, passed, detail):
        ACCEPTANCE_RESULTS[num] = (name, bool(passed), detail)
        print(f"criterion {num} [{name}]: {'PASS' if passed else 'FAIL'} - {detail}")
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        name, passed, detail = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {num} [{name}]: {detail}")
