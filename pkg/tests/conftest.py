"""Prints one PASS/FAIL line per acceptance criterion after the run."""
from collections import defaultdict

_criteria: dict[str, int] = {}
_titles: dict[int, str] = {}
_outcomes: dict[int, list[bool]] = defaultdict(list)


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            n = mark.args[0]
            _criteria[item.nodeid] = n
            if len(mark.args) > 1:
                _titles[n] = mark.args[1]


def pytest_runtest_logreport(report):
    n = _criteria.get(report.nodeid)
    if n is None:
        return
    if report.when == "call" or report.failed or report.skipped:
        _outcomes[n].append(report.passed and report.when == "call")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance")
    for n in sorted(set(_criteria.values())):
        results = _outcomes.get(n, [])
        verdict = "PASS" if results and all(results) else "FAIL"
        title = _titles.get(n, "")
        terminalreporter.write_line(f"ACCEPTANCE {n:2d} {verdict}  {title}".rstrip())
