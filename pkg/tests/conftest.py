"""Collects acceptance outcomes and prints one line per criterion at the end."""

import pytest

_OUTCOMES: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    rep = (yield).get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _OUTCOMES.setdefault(mark.args[0], []).append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_OUTCOMES, key=str):
        results = _OUTCOMES[number]
        failed = [name for name, ok in results if not ok]
        flag = "FAIL" if failed else "PASS"
        detail = f" (failing: {', '.join(failed)})" if failed else ""
        tr.write_line(f"criterion {number}: {flag}  {len(results) - len(failed)}/{len(results)} checks{detail}")
