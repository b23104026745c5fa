"""Collects acceptance-criterion outcomes and prints one PASS/FAIL line each."""
import pytest

_RESULTS: dict = {}


@pytest.fixture
def detail(request):
    """Attach a human-readable note to the current acceptance line."""
    def note(text: str):
        request.node.user_properties.append(("detail", text))
    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    notes = [v for k, v in item.user_properties if k == "detail"]
    _RESULTS[mark.kwargs["criterion"]] = (rep.passed, mark.kwargs.get("title", item.name), notes)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_RESULTS):
        passed, title, notes = _RESULTS[crit]
        line = f"{'PASS' if passed else 'FAIL'}  criterion {crit:>2}: {title}"
        if notes:
            line += "  [" + "; ".join(notes) + "]"
        terminalreporter.write_line(line)
