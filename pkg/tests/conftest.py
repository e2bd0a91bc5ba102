"""Shared test plumbing: the acceptance-criteria verdict reporter.

Acceptance tests record one PASS/FAIL line each; the lines are
re-emitted in a terminal section at the end of the run so the verdicts
are visible even when per-test output is captured.
"""

_acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
