import pytest


@pytest.fixture(scope="session")
def criterion_log(request):
    """Collector for acceptance-criterion result lines.

    The terminal-summary hook below prints them after the run, so the
    PASS/FAIL line per criterion is visible even with output capture on.
    """
    lines = []
    request.config._criterion_lines = lines
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
