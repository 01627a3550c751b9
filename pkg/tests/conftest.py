import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from driftplate import catalogue as cat
from driftplate.assembly import build_forms
from driftplate.eigensolve import smallest_eigenpairs
from driftplate.geometry import DriftSpec

settings.register_profile("default", max_examples=25, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    ok = rep.passed if rep.when == "call" else not rep.failed
    prev = CRITERIA.get(number, (title, True))
    CRITERIA[number] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, ok = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}")


@pytest.fixture(scope="session")
def beam100():
    forms = build_forms(cat.interval(), DriftSpec([0.0]), 100)
    return forms, smallest_eigenpairs(forms, 4)


@pytest.fixture(scope="session")
def reaper_arc():
    imm = cat.grim_reaper_arc(1.0)
    drift = DriftSpec([0.0, 1.0], unit_flag=True)
    forms = build_forms(imm, drift, 120)
    return imm, drift, forms, smallest_eigenpairs(forms, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
