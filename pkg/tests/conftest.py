import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from hypothesis import settings

settings.register_profile("invariants", max_examples=1000, derandomize=True, deadline=None)
settings.load_profile("invariants")

# outcome of every test marked ``invariant``, read by the acceptance gate
INVARIANT_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "invariant: property test of a module-level invariant")
    config.stash[INVARIANT_KEY] = {}


def pytest_collection_modifyitems(session, config, items):
    # acceptance last, so the invariant outcomes are known when it runs
    items.sort(key=lambda item: "test_acceptance.py" in item.nodeid)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.get_closest_marker("invariant") is None:
        return
    store = item.config.stash[INVARIANT_KEY]
    if rep.when == "call" or rep.failed:
        store[item.nodeid] = store.get(item.nodeid, True) and not rep.failed


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::" not in nodeid or getattr(rep, "when", "call") != "call":
                continue
            name = nodeid.split("::")[-1]
            lines.append((name, "PASS" if outcome == "passed" else "FAIL", rep.duration))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict, duration in sorted(lines):
        terminalreporter.write_line(f"{verdict}  {name}  ({duration:.1f}s)")
