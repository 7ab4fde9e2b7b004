"""Shared pytest hooks.

The acceptance tests record one human-readable result line per criterion.
pytest captures stdout on passing tests, so the lines are replayed here via
``pytest_terminal_summary`` — summary output is never captured, which keeps
the per-criterion report visible in any run, piped or not.
"""

ACCEPTANCE_REPORT: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_REPORT:
        terminalreporter.write_line(line)
