import pytest

_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = getattr(item, "criterion_detail", "")
        if report.skipped:
            status = "SKIP"
            if isinstance(report.longrepr, tuple):
                detail = report.longrepr[2].removeprefix("Skipped: ")
        else:
            status = "PASS" if report.passed else "FAIL"
        _results.append((status, name, detail))


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the criterion report."""
    def set_detail(text):
        request.node.criterion_detail = text
    return set_detail


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, detail in _results:
        line = f"{status} {name}"
        if detail:
            line += f": {detail}"
        terminalreporter.write_line(line)
