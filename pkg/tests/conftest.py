import pytest

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} [{n}] {title}: {detail}")


@pytest.fixture
def record():
    def _record(n, title, passed, detail):
        ACCEPTANCE[n] = (bool(passed), title, detail)
        print(f"{'PASS' if passed else 'FAIL'} [{n}] {title}: {detail}")
        assert passed, detail
    return _record
