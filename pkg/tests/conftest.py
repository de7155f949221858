def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    RESULTS = getattr(mod, "RESULTS", None)
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for res in sorted(RESULTS, key=lambda r: r.number):
        terminalreporter.write_line(res.line())
    n_ok = sum(r.passed for r in RESULTS)
    terminalreporter.write_line(f"{n_ok}/{len(RESULTS)} criteria passed")
