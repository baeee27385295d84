"""Shared pytest wiring: print one line per acceptance criterion.

The acceptance tests record their verdicts in acceptance_log.RESULTS as
they run; this hook replays them in the terminal summary so each
criterion's PASS/FAIL line is visible regardless of output capture.
"""

import acceptance_log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_log.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.RESULTS:
            terminalreporter.write_line(line)
