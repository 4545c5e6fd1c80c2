"""Shared fixtures and the acceptance-line reporter.

The acceptance tests record one PASS/FAIL line per criterion; the
terminal-summary hook prints them after the run so the gate's verdict
is visible even when pytest captures stdout.
"""

import numpy as np
import pytest

import operfit as of

_CRITERION_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    def record(name: str, passed: bool, detail: str = ""):
        verdict = "PASS" if passed else "FAIL"
        line = f"{name}: {verdict}"
        if detail:
            line += f" ({detail})"
        _CRITERION_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _CRITERION_LINES:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def plant_velocity() -> of.PlantModel:
    """Unity-gain plant with a 1/3 s lag, the slower preset."""
    return of.PLANT_PRESETS["paper-eq6"]


@pytest.fixture(scope="session")
def plant_servo() -> of.PlantModel:
    """High-gain servo plant, the faster preset."""
    return of.PLANT_PRESETS["paper-eq13"]


def make_session(operator, plant, *, seed: int, duration: float,
                 step: float = 0.01) -> of.Session:
    forcing = of.generate_forcing(of.ForcingSpec.default(seed=seed),
                                  step, duration)
    config = of.LoopConfig(operator=operator, plant=plant, step=step,
                           duration=duration)
    return of.simulate(config, forcing)


@pytest.fixture(scope="session")
def short_session(plant_velocity) -> of.Session:
    """12 s fractional-operator run used by the fast unit tests."""
    truth = of.FractionalModel(kp=4.403, alpha=-0.4101, delay=0.117)
    return make_session(truth, plant_velocity, seed=7, duration=12.0)


def rel_err(value: float, reference: float) -> float:
    return abs(value - reference) / abs(reference)


def assert_signals_equal(a, b):
    assert a.step == b.step
    assert a.t0 == b.t0
    assert np.array_equal(a.values, b.values)
