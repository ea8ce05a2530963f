ACCEPTANCE = {}


def record(number, passed, detail, seconds):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  ({seconds:.1f} s)  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
