"""Shared fixtures; collects acceptance-check outcomes and prints one
pass/fail line per criterion at the end of the session."""

import pytest

_criterion_lines: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record an acceptance criterion outcome; returns the passed flag so
    callers can assert on it afterwards."""

    def record(name: str, passed: bool, detail: str = "") -> bool:
        _criterion_lines.append((name, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_lines:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, passed, detail in _criterion_lines:
        status = "PASS" if passed else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        terminalreporter.write_line(f"[{status}] {name}{suffix}")
