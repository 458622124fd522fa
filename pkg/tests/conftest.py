"""Shared fixtures and acceptance-line reporting.

Tests marked ``acceptance`` each get one PASS/FAIL line in the terminal
summary so the whole gate can be read at a glance.
"""

import numpy as np
import pytest

import zeronoise as zn

_ACCEPTANCE_RESULTS = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, label = marker.args
    _ACCEPTANCE_RESULTS.append((number, label, report.passed, report.duration))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number, label, passed, duration in sorted(_ACCEPTANCE_RESULTS):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"[{verdict}] criterion {number:2d}: {label} ({duration:.2f}s)"
        )


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile the simulation kernels once so timed tests measure physics only."""
    grid = zn.Grid1D(64)
    h = zn.FlowField1D(zn.field_from_rule(zn.make_rule("constant", value=1.0), grid))
    gamma = zn.DiffusionCoeff1D(
        zn.field_from_rule(zn.make_rule("constant", value=1.0), grid)
    )
    config = zn.SdeConfig(dt=0.01, n_steps=64, burn_in=0, n_trajectories=1, seed=0, bins=16)
    zn.occupation_measure(h, gamma, 0.1, config)

    grid2 = zn.Grid2D(32)
    zeros = np.zeros((32, 32))
    zn.occupation_measure_2d(zeros, zeros, np.eye(2), 0.1, config)
    return True


@pytest.fixture
def grid512():
    return zn.Grid1D(512)


@pytest.fixture
def drift_two_plus_sin(grid512):
    rule = zn.make_rule("offset_sin", offset=2.0, amplitude=1.0, harmonic=1)
    return zn.FlowField1D(zn.field_from_rule(rule, grid512))


@pytest.fixture
def gamma_const(grid512):
    rule = zn.make_rule("constant", value=1.0)
    return zn.DiffusionCoeff1D(zn.field_from_rule(rule, grid512))


@pytest.fixture
def gamma_cos(grid512):
    rule = zn.make_rule("offset_cos", offset=1.0, amplitude=0.5, harmonic=1)
    return zn.DiffusionCoeff1D(zn.field_from_rule(rule, grid512))
