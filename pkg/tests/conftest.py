import pytest

_CRITERIA: dict = {}
_NOTES: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number = marker.args[0]
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or failed:
        prev = _CRITERIA.get(number, True)
        _CRITERIA[number] = prev and not failed


@pytest.fixture
def note(request):
    """Attach a line of measured output to the test's criterion summary."""
    marker = request.node.get_closest_marker("criterion")
    number = marker.args[0] if marker else 0
    return lambda text: _NOTES.setdefault(number, []).append(text)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status = "PASS" if _CRITERIA[number] else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}")
        for text in _NOTES.get(number, []):
            terminalreporter.write_line(f"    {text}")
