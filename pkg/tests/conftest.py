"""Shared fixtures: the reference two-bath setup used across the suite.

The workhorse configuration is a unit-frequency oscillator damped by two
identical Lorentz-cutoff Ohmic baths (coupling 0.05, cutoff 10), the left
one hot (T = 2) and the right one cold (T = 1).  Everything about it is
smooth: no resonance overlap with the cutoff, weak damping, well inside
every quadrature's comfort zone.
"""

import numpy as np
import pytest

from oscbath.scenario import Scenario, Bath, CentralState
from oscbath.spectral import DrudeOhmic
from oscbath.preparations import Thermal, SqueezedThermal

COUPLING = 0.05
CUTOFF = 10.0
T_HOT = 2.0
T_COLD = 1.0


@pytest.fixture(scope="session")
def drude():
    return DrudeOhmic(COUPLING, CUTOFF)


@pytest.fixture(scope="session")
def s0(drude):
    """Hot/cold thermal pair; ground-state central oscillator."""
    return Scenario(1.0, [Bath(drude, Thermal(T_HOT), "left"),
                          Bath(drude, Thermal(T_COLD), "right")])


@pytest.fixture(scope="session")
def s0_squeezed(drude):
    """Same damping, but the left bath is position-squeezed (r = 0.5)."""
    return Scenario(1.0, [Bath(drude, SqueezedThermal(T_HOT, 0.5), "left"),
                          Bath(drude, Thermal(T_COLD), "right")])


@pytest.fixture(scope="session")
def s0_equal(drude):
    """Both baths thermal at the same temperature (detailed balance)."""
    return Scenario(1.0, [Bath(drude, Thermal(T_COLD), "left"),
                          Bath(drude, Thermal(T_COLD), "right")])


@pytest.fixture(scope="session")
def s0_displaced_central(s0):
    """Hot/cold pair with a displaced minimum-uncertainty central state."""
    central = CentralState(var_q=0.5, var_p=0.5, mean_q=0.8, mean_p=-0.3)
    return Scenario(1.0, s0.baths, central=central)


# ---------------------------------------------------------------------------
# acceptance summary: one pass/fail line per criterion at the end of the run

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(cid, title): tags a test as one acceptance criterion",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    cid, title = mark.args
    if rep.when == "call" or rep.outcome != "passed":
        _ACCEPTANCE[cid] = (title, rep.outcome)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_ACCEPTANCE):
        title, outcome = _ACCEPTANCE[cid]
        word = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{cid}  {title:<60s} {word}")
