from collections import OrderedDict

import pytest

_OUTCOMES = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    num = dict(report.user_properties).get("criterion")
    if num is None:
        return
    entry = _OUTCOMES.setdefault(num, {"ok": True, "details": []})
    if report.failed:
        entry["ok"] = False
    if report.when == "call" or (report.when == "setup" and report.failed):
        detail = dict(report.user_properties).get("detail")
        if report.skipped:
            entry["ok"] = None
        entry["details"].append(detail or report.head_line)


@pytest.fixture(autouse=True)
def _criterion_tag(request, record_property):
    mark = request.node.get_closest_marker("criterion")
    if mark is not None:
        record_property("criterion", mark.args[0])


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_OUTCOMES):
        entry = _OUTCOMES[num]
        state = {True: "PASS", False: "FAIL", None: "SKIP"}[entry["ok"]]
        terminalreporter.write_line(f"[criterion {num}] {state}  " + "; ".join(
            d for d in entry["details"] if d))
