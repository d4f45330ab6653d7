import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import acceptance_report  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if acceptance_report.RESULTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(acceptance_report.RESULTS):
            terminalreporter.write_line(acceptance_report.RESULTS[n])
