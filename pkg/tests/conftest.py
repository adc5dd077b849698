import sys


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdict lines after capture is torn down."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
