ACCEPTANCE_LINES = []


def record_acceptance(number: int, description: str, passed: bool) -> None:
    line = f"ACCEPTANCE {number:2d} [{'PASS' if passed else 'FAIL'}] {description}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
