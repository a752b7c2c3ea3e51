import re
import sys


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call":
        return
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if m:
        status = "PASS" if report.passed else "FAIL"
        sys.stderr.write(
            f"[ACCEPTANCE] criterion {int(m.group(1)):02d} "
            f"({m.group(2).replace('_', '-')}): {status}\n")
        sys.stderr.flush()
