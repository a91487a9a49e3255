"""Shared pytest wiring.

The acceptance tests record one PASS/FAIL line per criterion; this hook
prints the collected lines as a dedicated block at the end of the run so
the verdicts are visible in normal (captured) pytest output.
"""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
