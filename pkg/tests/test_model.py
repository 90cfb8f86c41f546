from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import room
from microclimate_mpc.errors import DomainError
from microclimate_mpc.model import ControlSchedule, ExogenousSeries, MicroclimateState, air_mass


# expected values are quoted to the printed digits; tolerance is half a unit in the last one
@pytest.mark.parametrize("V, T, expected, tol", [(105.0, 21.0, 124.364, 0.0005), (540.0, 21.0, 639.6, 0.05)])
def test_air_mass_examples(V, T, expected, tol):
    assert air_mass(room(V=V), T) == pytest.approx(expected, abs=tol)


def test_air_mass_rejects_absolute_zero():
    with pytest.raises(DomainError):
        air_mass(room(V=105.0), -273.15)


@given(
    T=st.floats(-50, 60), dT=st.floats(0.01, 10),
    V=st.floats(10, 1000), dV=st.floats(0.1, 100),
)
def test_air_mass_monotone(T, dT, V, dV):
    assert air_mass(room(V=V), T + dT) < air_mass(room(V=V), T)
    assert air_mass(room(V=V + dV), T) > air_mass(room(V=V), T)


def test_infiltration_converted_once():
    p = room(R_r=0.36)
    assert p.infiltration_rate == pytest.approx(1e-4)
    assert replace(p, R_r=0.72).infiltration_rate == pytest.approx(2e-4)


@pytest.mark.parametrize(
    "overrides",
    [
        {"V": 0.0},
        {"U": -1.0},
        {"R_r": -0.1},
        {"W_min": 10.0},
        {"W_max": -10.0},
        {"Q_max": 0.5},  # no S_p
        {"Q_max": -0.1},
    ],
)
def test_room_params_invariants(overrides):
    with pytest.raises(DomainError):
        room(**overrides)


def test_state_rejects_negative_co2():
    with pytest.raises(DomainError):
        MicroclimateState(21.0, 21.0, -1e-6)


def test_series_left_interpolation():
    exo = ExogenousSeries([0.0, 3600.0, 7200.0], [1.0, 2.0, 3.0], [0.0, 5.0, 0.0])
    assert exo.T_out_at(0.0) == 1.0
    assert exo.T_out_at(3599.0) == 1.0
    assert exo.T_out_at(3600.0) == 2.0
    assert exo.N_oc_at(7200.0) == 0.0
    with pytest.raises(DomainError):
        exo.T_out_at(7300.0)


@pytest.mark.parametrize(
    "t, T, N",
    [([0.0, 0.0], [1.0, 1.0], [0.0, 0.0]), ([0.0, 1.0], [1.0], [0.0, 0.0]), ([0.0, 1.0], [1.0, 1.0], [0.0, -1.0])],
)
def test_series_invariants(t, T, N):
    with pytest.raises(DomainError):
        ExogenousSeries(t, T, N)


def test_series_window_inserts_start():
    exo = ExogenousSeries([0.0, 3600.0, 7200.0], [1.0, 2.0, 3.0], [0.0, 5.0, 0.0])
    w = exo.window(1800.0)
    np.testing.assert_array_equal(w.t_grid, [1800.0, 3600.0, 7200.0])
    np.testing.assert_array_equal(w.T_out, [1.0, 2.0, 3.0])
    assert w.with_first(T_out=-5.0).T_out[0] == -5.0
    assert exo.T_out[0] == 1.0  # original untouched


def test_schedule_validate_rejects_out_of_bounds():
    p = room(W_max=1000.0)
    ControlSchedule([1000.0, -5000.0], [0.0, 0.0]).validate(p)
    with pytest.raises(DomainError, match="W\\[0\\]"):
        ControlSchedule([1001.0], [0.0]).validate(p)
    with pytest.raises(DomainError, match="Q\\[0\\]"):
        ControlSchedule([0.0], [0.1]).validate(p)


def test_schedule_head_and_durations():
    s = ControlSchedule([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], durations=[600.0, 3600.0, 3600.0])
    assert s.total_duration == 7800.0
    h = s.head(1200.0)
    np.testing.assert_array_equal(h.W, [1.0, 2.0])
    np.testing.assert_array_equal(h.step_durations, [600.0, 600.0])
    assert len(s.head(0.0)) == 0


def test_types_are_immutable(start_state):
    with pytest.raises(Exception):
        start_state.T = 0.0
    s = ControlSchedule([1.0], [0.0])
    with pytest.raises(ValueError):
        s.W[0] = 5.0
