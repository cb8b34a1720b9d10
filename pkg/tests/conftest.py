"""Suite-wide configuration: acceptance-criterion summary lines.

Each acceptance criterion lives in tests/test_acceptance.py as a single
test named test_criterion_<number>_*. After the run, one line per criterion
is printed in the terminal summary:

    ACCEPTANCE <number>: PASS|FAIL
"""

import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for status, label in (("passed", "PASS"), ("failed", "FAIL"),
                          ("error", "FAIL"), ("skipped", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if m is None:
                continue
            num = int(m.group(1))
            if label == "FAIL" or num not in outcomes:
                outcomes[num] = label
    if outcomes:
        terminalreporter.write_sep("=", "acceptance criteria")
        for num in sorted(outcomes):
            terminalreporter.write_line(f"ACCEPTANCE {num}: {outcomes[num]}")
