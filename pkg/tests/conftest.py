import pytest

_LINES = []


@pytest.fixture(scope="session")
def criterion():
    """Record a one-line verdict and fail the test when it does not hold."""
    def record(number: int, ok: bool, text: str):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {text}"
        _LINES.append((number, line))
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_LINES):
            terminalreporter.write_line(line)
