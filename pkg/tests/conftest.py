"""Shared test plumbing: the acceptance-criterion report hook."""

CRITERIA = {}


def record_criterion(number, label, passed, detail=""):
    CRITERIA[number] = (label, bool(passed), str(detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        label, passed, detail = CRITERIA[number]
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number} ({label}): {status}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)
