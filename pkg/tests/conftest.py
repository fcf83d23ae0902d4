import numpy as np
import pytest
from hypothesis import settings

from wcoda.lifetable import LifeTableSeries

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


def random_series(rng, n_years, n_ages=111, radix=100_000.0, start=1900):
    """Positive random surface closed to the radix."""
    logd = rng.normal(0.0, 1.0, (n_years, n_ages)) + np.linspace(0, 3, n_ages)
    d = np.exp(logd)
    d = radix * d / d.sum(axis=1, keepdims=True)
    return LifeTableSeries(np.arange(start, start + n_years), np.arange(n_ages), d, radix)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def pytest_terminal_summary(terminalreporter):
    reports = [
        r
        for key in ("passed", "failed", "skipped")
        for r in terminalreporter.stats.get(key, [])
        if "test_acceptance.py" in getattr(r, "nodeid", "") and r.when in ("call", "setup")
    ]
    if not reports:
        return
    terminalreporter.section("acceptance criteria")
    seen = set()
    for r in sorted(reports, key=lambda r: r.nodeid):
        if r.nodeid in seen or (r.when == "setup" and r.outcome != "skipped"):
            continue
        seen.add(r.nodeid)
        name = r.nodeid.split("::")[-1]
        terminalreporter.write_line(f"{r.outcome.upper():8} {name}")
