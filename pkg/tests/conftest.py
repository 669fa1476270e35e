RESULTS = []


def record(tag, ok, detail):
    line = f"{tag} {'PASS' if ok else 'FAIL'} {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
