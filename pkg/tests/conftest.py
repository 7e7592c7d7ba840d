import re

import pytest

RESULTS = {}
DETAILS = {}


@pytest.fixture
def record():
    """record(n, text): attach measured values to acceptance criterion n."""
    def put(n, text):
        DETAILS[n] = text
    return put


def pytest_runtest_logreport(report):
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or (report.when == "setup" and report.failed):
        RESULTS[n] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        extra = f"  ({DETAILS[n]})" if n in DETAILS else ""
        terminalreporter.write_line(f"criterion {n}: {RESULTS[n]}{extra}")
