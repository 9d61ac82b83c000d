import time

import numpy as np
import pytest
from hypothesis import settings

from polyres.dynamics import FlowMap, generate_trajectory, lorenz
from polyres.harness.config import ExperimentConfig
from polyres.harness.experiments import run_closed_loop, run_open_loop

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")

# acceptance criteria append (label, passed, detail) here
CRITERIA_LOG: list = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in CRITERIA_LOG:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")


@pytest.fixture(scope="session")
def lorenz_open():
    """Lorenz samples every 0.2 time units, on the attractor."""
    return generate_trajectory(FlowMap(lorenz(), 0.2), n_samples=2000)


@pytest.fixture(scope="session")
def lorenz_closed():
    """Lorenz samples every 0.02 time units, on the attractor."""
    return generate_trajectory(FlowMap(lorenz(), 0.02), n_samples=25000)


@pytest.fixture(scope="session")
def open_loop_result():
    cfg = ExperimentConfig.for_mode("open_loop")
    t0 = time.perf_counter()
    rows = run_open_loop(cfg)
    return cfg, rows, time.perf_counter() - t0


@pytest.fixture(scope="session")
def closed_loop_result():
    cfg = ExperimentConfig.for_mode("closed_loop")
    t0 = time.perf_counter()
    rows = run_closed_loop(cfg)
    return cfg, rows, time.perf_counter() - t0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
