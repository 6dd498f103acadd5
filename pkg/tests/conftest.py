import contextlib

import pytest

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion."""

    @contextlib.contextmanager
    def check(name):
        info = {}
        try:
            yield info
        except BaseException:
            _CRITERIA.append(("FAIL", name, info.get("detail", "")))
            raise
        _CRITERIA.append(("PASS", name, info.get("detail", "")))

    return check


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, detail in _CRITERIA:
        line = f"[{status}] {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
