import pytest

_criteria = {}


@pytest.fixture
def criterion():
    """Record one acceptance verdict; printed in the terminal summary."""
    def record(number, ok, detail):
        _criteria[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        terminalreporter.write_line(_criteria[number])
