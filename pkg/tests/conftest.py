import os
import sys
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "pspca",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("pspca")

_criteria = defaultdict(list)


def pytest_runtest_logreport(report):
    num = getattr(report, "_criterion", None)
    if num is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = "xfailed" if hasattr(report, "wasxfail") else report.outcome
        _criteria[num].append((report.nodeid.split("::")[-1], outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result()._criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        outcomes = [o for _, o in _criteria[num]]
        if any(o == "failed" for o in outcomes):
            status = "FAIL"
        elif any(o == "xfailed" for o in outcomes):
            status = "FAIL (known, documented sub-check)"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        names = ", ".join(n if o in ("passed", "skipped") else f"{n} [{o}]" for n, o in _criteria[num])
        terminalreporter.write_line(f"criterion {num:>2}: {status}  ({names})")


def random_instance(seed, n_range=(10, 100), p_range=(2, 40), alphas=(0.5, 0.9, 0.95, 1.0)):
    """Centred random data of varied shape, correlation and rank, plus an alpha."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    p = int(rng.integers(p_range[0], p_range[1] + 1))
    alpha = float(alphas[int(rng.integers(len(alphas)))])
    kind = int(rng.integers(3))
    if kind == 0:
        X = rng.standard_normal((n, p))
    elif kind == 1:
        X = rng.standard_normal((n, p)) @ rng.standard_normal((p, p))
    else:
        r = int(rng.integers(1, min(n, p) + 1))
        X = rng.standard_normal((n, r)) @ rng.standard_normal((r, p))
    X = X - X.mean(axis=0)
    return X, alpha


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
