"""Per-criterion PASS/FAIL summary for tests marked ``criterion``."""

from collections import OrderedDict

import pytest

_results = OrderedDict()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number = marker.args[0]
    entry = _results.setdefault(number, {"title": marker.args[1], "budget": marker.kwargs.get("budget"),
                                         "rows": OrderedDict(), "seconds": 0.0})
    row = entry["rows"].setdefault(item.nodeid.split("::")[-1], "passed")
    if report.when == "call":
        entry["seconds"] += report.duration
    if report.failed:
        entry["rows"][item.nodeid.split("::")[-1]] = "failed"
    elif report.skipped and row == "passed":
        entry["rows"][item.nodeid.split("::")[-1]] = "skipped"


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        entry = _results[number]
        rows = entry["rows"]
        failed = [name for name, state in rows.items() if state == "failed"]
        ran = [name for name, state in rows.items() if state != "skipped"]
        budget = entry["budget"]
        over = budget is not None and entry["seconds"] > budget
        verdict = "FAIL" if failed or over or not ran else "PASS"
        timing = f"{entry['seconds']:.2f} s" + (f" of {budget:g} s budget" if budget is not None else "")
        terminalreporter.write_line(
            f"{verdict} criterion {number}: {entry['title']} "
            f"({len(ran) - len(failed)}/{len(ran)} checks passed, {timing})")
        for name in failed:
            terminalreporter.write_line(f"    failed: {name}")
        if over:
            terminalreporter.write_line("    runtime budget exceeded")
