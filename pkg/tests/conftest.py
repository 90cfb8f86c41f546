import numpy as np
import pytest

from microclimate_mpc.model import PPM, ComfortSpec, ExogenousSeries, MicroclimateState, RoomParams
from microclimate_mpc.scenarios import BUILTIN_PARAMS, builtin_scenario

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def comfort():
    return ComfortSpec()


@pytest.fixture
def tc1():
    return BUILTIN_PARAMS["tc1"]


@pytest.fixture
def tc2():
    return BUILTIN_PARAMS["tc2"]


@pytest.fixture
def start_state():
    return MicroclimateState(21.0, 21.0, 400 * PPM)


@pytest.fixture(scope="session")
def tc1_cold():
    return builtin_scenario("tc1", "cold")


def constant_exo(T_out, N_oc=0.0, hours=24):
    t = np.arange(hours + 1) * 3600.0
    return ExogenousSeries(t, np.full(len(t), float(T_out)), np.full(len(t), float(N_oc)))


def room(**overrides):
    base = dict(U=55.0, U_star=200.0, mC_star=10e6, V=300.0, R_r=0.1, W_min=-5000.0, W_max=5000.0, W_oc=120.0)
    base.update(overrides)
    return RoomParams(**base)
