import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion
# ---------------------------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def measured(request):
    """Dict for a criterion test to record the numbers it measured."""
    data = {}
    request.node.stash[_measured_key] = data
    return data


_measured_key = pytest.StashKey[dict]()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    detail = item.stash.get(_measured_key, {})
    _CRITERIA[number] = (rep.passed, title, detail)


def _format(number, passed, title, detail):
    text = ", ".join(f"{k}={_fmt(v)}" for k, v in detail.items())
    return f"criterion {number}: {'PASS' if passed else 'FAIL'} {title}" + (f" [{text}]" if text else "")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, title, detail = _CRITERIA[number]
        terminalreporter.write_line(_format(number, passed, title, detail))
