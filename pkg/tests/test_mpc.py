import numpy as np
import pytest

from conftest import constant_exo
from microclimate_mpc.comfort import comfort_bounds, min_ventilation, temperature_penalty
from microclimate_mpc.cost import energy_objective
from microclimate_mpc.dynamics import simulate
from microclimate_mpc.errors import DomainError
from microclimate_mpc.model import PPM, ComfortSpec, MicroclimateState
from microclimate_mpc.mpc import (
    MpcProblem,
    control_grid,
    lmpc_plan,
    mpc_plan,
    solve_lmpc,
    solve_mpc,
    steps_until,
)
from microclimate_mpc.scenarios import builtin_scenario
from microclimate_mpc.slp import finite_diff_check


@pytest.fixture(scope="module")
def cold():
    return builtin_scenario("tc1", "cold")


@pytest.fixture(scope="module")
def cold_plans(cold):
    args = (cold.initial, cold.exo, cold.params, cold.comfort, 24)
    return solve_mpc(*args, t_limit=86400.0), solve_lmpc(*args, t_limit=86400.0)


def test_control_grid_aligns_to_hours():
    np.testing.assert_allclose(control_grid(1800.0, 3), [1800.0, 3600.0, 3600.0])
    np.testing.assert_allclose(control_grid(0.0, 3), [3600.0] * 3)
    np.testing.assert_allclose(control_grid(82800.0 + 600.0, 5, t_limit=86400.0), [3000.0])
    assert steps_until(600.0, 86400.0) == 24
    with pytest.raises(DomainError):
        control_grid(0.0, 0)


def test_problem_size_and_bounds(cold):
    durations = control_grid(0.0, 24)
    prob = MpcProblem(cold.initial, cold.exo, cold.params, cold.comfort, durations)
    assert prob.n == 5 * 24
    assert np.all(prob.lb <= prob.ub)
    Q_lo = prob.lb[48:72]
    np.testing.assert_allclose(Q_lo, min_ventilation(cold.exo.N_oc_at(np.arange(24) * 3600.0), cold.comfort))


def test_gradients_match_finite_differences(cold):
    prob = MpcProblem(cold.initial, cold.exo, cold.params, cold.comfort, control_grid(0.0, 12))
    rng = np.random.default_rng(0)
    x = rng.uniform(prob.lb, np.where(np.isfinite(prob.ub), prob.ub, 2.0))
    h = 1e-4 * np.where(np.isfinite(prob.tr_scale()), prob.tr_scale(), 1.0)
    assert finite_diff_check(prob, x, h) <= 1e-4


def test_horizon_zero_is_an_error(cold):
    with pytest.raises(DomainError):
        mpc_plan(cold.initial, cold.exo, cold.params, cold.comfort, 0)
    with pytest.raises(DomainError):
        lmpc_plan(cold.initial, cold.exo, cold.params, cold.comfort, 0)


def test_forecast_must_cover_horizon(cold):
    with pytest.raises(DomainError):
        mpc_plan(cold.initial, constant_exo(0.0, hours=6), cold.params, cold.comfort, 12)


def test_free_floating_mild_day():
    sc = builtin_scenario("tc1", "mild")
    exo = constant_exo(20.0, 0.0)
    s0 = MicroclimateState(21.0, 21.0, 400 * PPM)
    sched = mpc_plan(s0, exo, sc.params, sc.comfort, 24)
    assert energy_objective(sched, exo, sc.params).total <= 100.0


def test_cold_day_ventilation_at_minimum(cold, cold_plans):
    mpc, _ = cold_plans
    starts = mpc.schedule.boundaries[:-1]
    Q_min = min_ventilation(cold.exo.N_oc_at(starts), cold.comfort)
    np.testing.assert_allclose(mpc.schedule.Q, Q_min, atol=1e-6)


def test_lmpc_ventilation_is_exact_minimum(cold, cold_plans):
    _, lmpc = cold_plans
    starts = lmpc.schedule.boundaries[:-1]
    np.testing.assert_array_equal(lmpc.schedule.Q, min_ventilation(cold.exo.N_oc_at(starts), cold.comfort))


def test_lmpc_underheats_cold_day(cold, cold_plans):
    mpc, lmpc = cold_plans
    pen = [
        temperature_penalty(simulate(cold.initial, r.schedule, cold.exo, cold.params, cold.comfort), cold.exo, cold.comfort)
        for r in (mpc, lmpc)
    ]
    assert pen[0] <= 0.01
    assert pen[1] > pen[0]


def test_schedules_respect_equipment(cold, cold_plans):
    for r in cold_plans:
        r.schedule.validate(cold.params)


def test_zero_slack_plan_meets_band_at_boundaries(cold, cold_plans):
    mpc, _ = cold_plans
    assert mpc.slack == pytest.approx(0.0, abs=1e-9)
    traj = simulate(cold.initial, mpc.schedule, cold.exo, cold.params, cold.comfort)
    ends = np.arange(1, 25) * 60
    T_end = traj.T[ends]
    here = comfort_bounds(cold.exo.N_oc_at(ends * 60.0 - 3600.0), cold.comfort)
    tol = 1e-6
    assert np.all(T_end >= here.T_lo - tol) and np.all(T_end <= here.T_hi + tol)


def test_mpc_objective_not_worse_than_lmpc(cold, cold_plans):
    prob = MpcProblem(cold.initial, cold.exo, cold.params, cold.comfort, control_grid(0.0, 24))
    mpc, lmpc = cold_plans
    f = [prob.evaluate(prob.with_feasible_slacks(prob.pack(r.schedule.W, r.schedule.Q))).f for r in (mpc, lmpc)]
    assert f[0] <= f[1] * 1.01


def test_linear_regime_agreement(tc1):
    comfort = ComfortSpec()
    exo = constant_exo(0.0, 0.0)
    s0 = MicroclimateState(15.0, 15.0, 400 * PPM)
    e = [energy_objective(plan(s0, exo, tc1, comfort, 24), exo, tc1).total for plan in (mpc_plan, lmpc_plan)]
    assert e[1] == pytest.approx(e[0], rel=0.05)


def test_more_starts_never_worse(cold):
    args = (cold.initial, cold.exo, cold.params, cold.comfort, 8)
    one = solve_mpc(*args, n_starts=1)
    two = solve_mpc(*args, n_starts=2)
    assert two.objective <= one.objective + 1e-9


def test_warm_start_shifted(cold, cold_plans):
    mpc, _ = cold_plans
    traj = simulate(cold.initial, mpc.schedule.head(3600.0), cold.exo, cold.params, cold.comfort)
    res = solve_mpc(
        traj.final_state, cold.exo, cold.params, cold.comfort, 23, t0=3600.0, t_limit=86400.0,
        warm_start=mpc.schedule, warm_start_t0=0.0,
    )
    assert len(res.starts) == 3
    assert res.objective <= min(f for _, f, _ in res.starts) + 1e-9
