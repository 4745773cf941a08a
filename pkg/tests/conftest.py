import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def vessels_seed7():
    """The 2 000 / 200 synthetic split used by the learning checks."""
    from semiscale.data import generate_synthetic_vessels

    x, m = generate_synthetic_vessels(7, 2200)
    return (x[:2000], m[:2000]), (x[2000:], m[2000:])


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")
    config.addinivalue_line("markers", "slow: trains networks; minutes on one core")


_CRITERIA = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _CRITERIA[item.nodeid] = mark.args


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    outcomes = {}
    for status in ("passed", "failed", "error", "skipped", "xfailed", "xpassed"):
        for rep in terminalreporter.stats.get(status, []):
            if rep.nodeid in _CRITERIA and (rep.when == "call" or status in ("skipped", "error")):
                outcomes.setdefault(_CRITERIA[rep.nodeid], []).append(status)
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), found in sorted(outcomes.items()):
        if any(s in ("failed", "error", "xpassed") for s in found):
            verdict = "FAIL"
        elif all(s == "skipped" for s in found):
            verdict = "SKIP"
        elif "passed" not in found:
            verdict = "FAIL (expected)"
        else:
            verdict = "PASS"
        notes = []
        if "xfailed" in found and verdict == "PASS":
            notes.append(f"{found.count('xfailed')} literal form(s) fail as expected")
        if "skipped" in found and verdict == "PASS":
            notes.append(f"{found.count('skipped')} skipped")
        extra = f"  [{'; '.join(notes)}]" if notes else ""
        terminalreporter.write_line(f"{verdict:<15} criterion {number:>2}: {title}{extra}")
