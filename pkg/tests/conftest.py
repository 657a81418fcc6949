"""Shared acceptance-report plumbing.

Acceptance tests record one line per criterion; the lines are echoed in a
dedicated section at the end of the run so the verdicts are visible even when
pytest captures stdout.
"""

_CRITERION_LINES = []


def record_criterion(line: str) -> None:
    _CRITERION_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERION_LINES):
            terminalreporter.write_line(line)
