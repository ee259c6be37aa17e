import math

import numpy as np
import pytest

from deltaphi import ShiftMap, compute_constants, sine_field


@pytest.fixture(scope="session")
def sine():
    return sine_field()


@pytest.fixture(scope="session")
def smap(sine):
    return ShiftMap.build(sine, 0.1)


@pytest.fixture(scope="session")
def report(smap):
    return compute_constants(smap, 0.1)


@pytest.fixture
def grid1001():
    return np.linspace(0.0, math.pi, 1001)


# -- acceptance summary: one pass/fail line per criterion -------------------

_CRITERIA = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        _CRITERIA.append((props["criterion"], report.outcome, props.get("measured", "")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, measured in _CRITERIA:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  [{measured}]")
