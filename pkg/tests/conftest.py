import pytest
from hypothesis import settings

# statistical properties are checked on a fixed example stream so the suite never flakes
settings.register_profile("default", derandomize=True, deadline=None)
settings.load_profile("default")

_RANK = {"passed": 0, "skipped": 1, "failed": 2}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion checked by this test")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        rep.criterion = mark.args


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    if report.when != "call" and report.outcome == "passed":
        return
    number, text = crit
    table = pytest_runtest_logreport.config._criteria
    state = "skipped" if report.skipped else report.outcome
    detail = dict(report.user_properties).get("measured", "")
    if report.skipped and isinstance(report.longrepr, tuple):
        detail = report.longrepr[2].removeprefix("Skipped: ")
    prev = table.get(number)
    if prev is None or _RANK[state] >= _RANK[prev[1]]:
        table[number] = (text, state, detail)


def pytest_sessionstart(session):
    pytest_runtest_logreport.config = session.config


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = getattr(config, "_criteria", {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(table):
        text, state, detail = table[number]
        tag = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[state]
        line = f"[{tag}] {number:>2}. {text}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
