"""Per-criterion pass/fail report for the acceptance suite.

A test marked ``@pytest.mark.criterion(n, "title")`` contributes one line to
the terminal summary. ``record_detail`` attaches the measured numbers to it.
"""

import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config.stash[_RESULTS] = {}


@pytest.fixture
def record_detail(request):
    def record(text):
        request.node.user_properties.append(("detail", text))
    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (report.when == "call" or report.failed):
        return
    number, title = marker.args
    details = [v for k, v in item.user_properties if k == "detail"]
    status = "PASS" if report.passed else "FAIL"
    item.config.stash[_RESULTS][number] = (title, status, "; ".join(details))


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_RESULTS]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, status, detail = results[number]
        line = f"criterion {number:2d} {status}  {title}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
