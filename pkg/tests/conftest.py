import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE: dict[int, tuple[str, str, list[str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        notes = getattr(item, "acceptance_notes", [])
        _ACCEPTANCE[number] = (title, "PASS" if report.passed else "FAIL", notes)


@pytest.fixture
def notes(request):
    """Per-criterion sub-check log shown in the summary."""
    request.node.acceptance_notes = []
    return request.node.acceptance_notes


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, verdict, sub = _ACCEPTANCE[number]
        tr.write_line(f"criterion {number:2d}: {verdict}  {title}")
        for line in sub:
            tr.write_line(f"              {line}")
