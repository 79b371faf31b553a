_criteria = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    # setup time counts too: the shared simulation fixtures run there
    if call.when in ("setup", "call"):
        number, title = mark.args
        _, ok, seconds = _criteria.get(number, (title, True, 0.0))
        _criteria[number] = (title, ok and call.excinfo is None, seconds + call.duration)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok, seconds = _criteria[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {status}  {title} ({seconds:.1f}s)")
