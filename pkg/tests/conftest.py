import os
import sys

sys.path.insert(0, os.path.dirname(__file__))


def pytest_terminal_summary(terminalreporter):
    import fixtures

    if fixtures.ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in fixtures.ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
