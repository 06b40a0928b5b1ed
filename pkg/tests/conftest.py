"""Shared fixtures and the acceptance summary reporter.

The acceptance module's outcomes are echoed as one PASS/FAIL line per
check at the end of the run, so the gate status is readable without
scrolling through the full pytest output.
"""

import dataclasses
import pathlib
import time

import numpy as np
import pytest

from quadswarm.consensus import integrate_protocol
from quadswarm.mission import load_config

_SCENARIOS = pathlib.Path(__file__).resolve().parents[1] / (
    "src/quadswarm/scenarios")

_acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.fspath.basename == "test_acceptance.py":
        _acceptance[item.name] = rep.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance:
        return
    terminalreporter.write_sep("-", "acceptance summary")
    for name, outcome in _acceptance.items():
        mark = {"passed": "PASS", "failed": "FAIL"}.get(
            outcome, outcome.upper())
        terminalreporter.write_line(f"{mark}  {name}")


def scenario_path(name):
    return _SCENARIOS / f"{name}.cfg"


@pytest.fixture(scope="session")
def cfg_fixed_unweighted():
    return load_config(scenario_path("scenario_2_4_1"))


@pytest.fixture(scope="session")
def cfg_fixed_weighted():
    return load_config(scenario_path("scenario_2_5_1"))


@pytest.fixture(scope="session")
def cfg_time_varying():
    return load_config(scenario_path("scenario_2_5_2"))


@dataclasses.dataclass(frozen=True)
class TimedRun:
    """A scenario integration plus how long it took."""

    traj: object
    wall: float


def timed_protocol_run(net, q0, duration, dt, stride, stop_tol):
    start = time.perf_counter()
    traj = integrate_protocol(net, q0, duration, dt=dt, stride=stride,
                              stop_tol=stop_tol)
    return TimedRun(traj=traj, wall=time.perf_counter() - start)


def _run(cfg):
    return timed_protocol_run(
        cfg.network, np.asarray(cfg.agents, dtype=float)[:, :3],
        cfg.T, cfg.dt, cfg.stride, cfg.stop_tol)


@pytest.fixture(scope="session")
def run_fixed_unweighted(cfg_fixed_unweighted):
    return _run(cfg_fixed_unweighted)


@pytest.fixture(scope="session")
def run_fixed_weighted(cfg_fixed_weighted):
    return _run(cfg_fixed_weighted)


@pytest.fixture(scope="session")
def run_time_varying(cfg_time_varying):
    return _run(cfg_time_varying)
