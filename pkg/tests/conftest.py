"""Shared fixtures and the per-criterion summary printed after the run."""

from collections import defaultdict
from pathlib import Path

import pytest

from sdesym.runner import CORPUS_DIR

CRITERIA = {
    1: "example corpus, symbolic",
    2: "Stratonovich suite",
    3: "persistence condition",
    4: "two-dimensional examples",
    5: "Monte Carlo oracle",
    6: "property suites",
}

_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    # setup failures count, otherwise only the call phase
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        passed = rep.passed and not hasattr(rep, "wasxfail")
        _outcomes[marker.args[0]].append((item.nodeid, passed))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        res = _outcomes.get(n)
        if not res:
            continue
        ok = all(p for _, p in res)
        terminalreporter.write_line(f"criterion {n} ({title}): {'PASS' if ok else 'FAIL'}"
                                    f"  [{sum(p for _, p in res)}/{len(res)} checks]")


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS_DIR
