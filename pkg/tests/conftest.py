import pytest

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(k, passed, detail)``."""

    def record(k, passed, detail):
        _CRITERIA[k] = (bool(passed), detail)
        print(f"criterion {k:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        passed, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
