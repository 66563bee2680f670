import pytest

_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    detail = getattr(item, "criterion_detail", "")
    _ACCEPTANCE.append((number, title, report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}" + (f"  ({detail})" if detail else ""))


@pytest.fixture
def report(request):
    """Attach a one-line summary to the acceptance line of the running test."""
    def note(text):
        request.node.criterion_detail = text
    return note
