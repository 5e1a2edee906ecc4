"""Shared pytest hooks: print a one-line verdict per acceptance criterion."""

import re


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance checks")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    verdicts = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid or getattr(report, "when", "call") != "call":
                continue
            match = re.search(r"::test_(c\d+)", nodeid)
            if match:
                verdicts[match.group(1)] = outcome
    if not verdicts:
        return

    from test_acceptance import CRITERIA

    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(verdicts, key=lambda k: int(k[1:])):
        description = CRITERIA.get(f"test_{key}", "")
        status = "PASS" if verdicts[key] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {key[1:]}: {status} - {description}")
