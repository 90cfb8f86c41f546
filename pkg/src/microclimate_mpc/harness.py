"""Closed-loop (rolling-horizon) execution, disturbance injection and studies."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import clone

from ._validation import check_multiple
from .comfort import temperature_penalty
from .controllers import LMPCController, MPCController, OnOffController
from .cost import DEFAULT_SLACK_WEIGHT, EnergyBreakdown, energy_objective
from .dynamics import Trajectory, simulate
from .errors import DomainError, MicroclimateError, SolverError
from .model import PPM, ExogenousSeries, MicroclimateState

log = logging.getLogger(__name__)

DAY = 86400.0
MIN_REPLAN = 300.0
MAX_REPLAN = 3600.0
#: replan intervals quoted for the closed-loop studies [s]
REPLAN_PRESETS = {"hourly": 3600.0, "six_minutes": 360.0}


@dataclass(frozen=True)
class DisturbanceSpec:
    sigma_T_room: float = 1.0
    sigma_T_out: float = 1.0
    occupancy_factor_range: tuple = (0.0, 2.0)
    seed: int = 0

    def __post_init__(self):
        if self.sigma_T_room < 0 or self.sigma_T_out < 0:
            raise DomainError("noise standard deviations must be >= 0")
        lo, hi = self.occupancy_factor_range
        if lo < 0 or hi < lo:
            raise DomainError("occupancy factor range must satisfy 0 <= low <= high")


@dataclass(frozen=True, eq=False)
class RunResult:
    trajectory: Trajectory
    energy: EnergyBreakdown
    penalty: float
    solve_times: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    controller_tag: str = ""
    scenario_tag: str = ""

    def __post_init__(self):
        if self.penalty < 0:
            raise DomainError("penalty must be >= 0")

    @property
    def max_co2_ppm(self):
        return float(np.max(self.trajectory.nu_co2) / PPM)

    def summary(self):
        kwh = self.energy.to_kwh()
        return {
            "controller": self.controller_tag,
            "heat_cool_kWh": kwh["heat_cool_kWh"],
            "ventilation_kWh": kwh["vent_thermal_kWh"] + kwh["vent_fan_kWh"],
            "total_kWh": kwh["total_kWh"],
            "penalty_Kh": self.penalty,
            "max_co2_ppm": self.max_co2_ppm,
        }


def perturb_inputs(true_state: MicroclimateState, exo_window: ExogenousSeries, spec: DisturbanceSpec, rng):
    """Noisy measurement of the room temperature and noisy first forecast values.

    Draw order is fixed (room T, outside T, occupancy factor) so a seeded
    generator reproduces the same perturbations.
    """
    dT = rng.normal(0.0, spec.sigma_T_room)
    dT_out = rng.normal(0.0, spec.sigma_T_out)
    lo, hi = spec.occupancy_factor_range
    factor = rng.uniform(lo, hi)
    state = replace(true_state, T=true_state.T + dT)
    exo = exo_window.with_first(
        T_out=exo_window.T_out[0] + dT_out, N_oc=max(0.0, exo_window.N_oc[0] * factor)
    )
    return state, exo


def _check_replan(replan_interval, dt_int):
    if not (MIN_REPLAN <= replan_interval <= MAX_REPLAN):
        raise DomainError(
            f"replan interval must lie in [{MIN_REPLAN:g}, {MAX_REPLAN:g}] s, got {replan_interval:g}"
        )
    check_multiple(replan_interval, dt_int, "replan interval")


def rolling_run(
    scenario,
    controller,
    replan_interval=3600.0,
    disturbance: DisturbanceSpec | None = None,
    dt_int=60.0,
    duration=DAY,
) -> RunResult:
    """Run ``controller`` in closed loop against the true plant for ``duration`` seconds.

    Planners see a (possibly perturbed) measurement and forecast; the plant
    always integrates the nonlinear model with the true forecast. Thermostat
    controllers are queried at every integration step and are not perturbed.
    """
    _check_replan(replan_interval, dt_int)
    ctrl = clone(controller).fit(scenario)
    exo = scenario.exo
    t0 = exo.start
    t_end = t0 + duration
    exo.require(t0, t_end)
    rng = np.random.default_rng(disturbance.seed) if disturbance is not None else None

    state = scenario.initial
    traj = Trajectory.empty(state, t0)
    solve_times, iterations = [], []
    cycle = 0
    t = t0
    while t < t_end - 1e-6:
        if ctrl.decides_every_step:
            seg = min(dt_int, t_end - t)
            seen_state, seen_exo = state, exo
        else:
            seg = min(replan_interval, t_end - t)
            seen_state, seen_exo = state, exo
            if rng is not None:
                seen_state, seen_exo = perturb_inputs(state, exo.window(t), disturbance, rng)
        start = time.perf_counter()
        try:
            plan = ctrl.predict(seen_state, t, seen_exo)
        except SolverError as exc:
            raise SolverError(str(exc), cycle=cycle) from exc
        except MicroclimateError as exc:
            raise type(exc)(f"cycle {cycle}: {exc}") from exc
        solve_times.append(time.perf_counter() - start)
        last = getattr(ctrl, "last_result_", None)
        iterations.append(int(last.iterations) if last is not None else 0)

        head = plan.head(seg)
        if head.total_duration < seg - 1e-6:
            raise SolverError(f"plan covers {head.total_duration:g} s, {seg:g} s needed", cycle=cycle)
        piece = simulate(state, head, exo, scenario.params, scenario.comfort, dt_int, t0=t)
        traj = traj.extend(piece)
        state = piece.final_state
        t = float(piece.t[-1])
        cycle += 1

    energy = energy_objective(traj.schedule(), exo, scenario.params, t0=t0)
    penalty = temperature_penalty(traj, exo, scenario.comfort)
    return RunResult(
        traj, energy, penalty, solve_times, iterations,
        controller_tag=ctrl.tag, scenario_tag=getattr(scenario, "name", "custom"),
    )


def default_controllers():
    return {"mpc": MPCController(), "lmpc": LMPCController(), "onoff": OnOffController()}


def compare_controllers(scenario, controllers=None, replan_interval=3600.0, disturbance=None, dt_int=60.0):
    """One summary row per controller on the same scenario (same seed when disturbed).

    A controller that fails gets a row with ``failed`` set and the error text.
    """
    controllers = controllers if controllers is not None else default_controllers()
    if not controllers:
        raise DomainError("no controllers to compare")
    rows, results = [], {}
    for name, ctrl in controllers.items():
        try:
            res = rolling_run(scenario, ctrl, replan_interval, disturbance, dt_int)
        except MicroclimateError as exc:
            log.error("controller %s failed: %s", name, exc)
            rows.append({"controller": name, "failed": True, "error": str(exc)})
            continue
        results[name] = res
        rows.append({**res.summary(), "controller": name, "failed": False})
    return rows, results


def horizon_objective(result: RunResult, slack_weight=DEFAULT_SLACK_WEIGHT):
    """Closed-loop cost used to rank planning horizons: energy [Wh] plus priced comfort penalty."""
    return result.energy.total + slack_weight * result.penalty


def horizon_study(scenario, horizons_h=(2, 3, 4, 6, 24), replan_interval=3600.0, dt_int=60.0):
    """Nonlinear MPC with fixed planning windows of each length (hours)."""
    rows = []
    for h in horizons_h:
        res = rolling_run(scenario, MPCController(horizon=int(h)), replan_interval, None, dt_int)
        rows.append({
            "horizon_h": int(h),
            "objective_Wh": horizon_objective(res),
            "total_kWh": res.energy.total / 1000.0,
            "penalty_Kh": res.penalty,
        })
    return rows


def uncertainty_study(scenario, seeds=20, replan_interval=360.0, spec: DisturbanceSpec | None = None,
                      controllers=None, dt_int=60.0):
    """Penalty and energy per seed for each planner under perturbed measurements and forecasts."""
    spec = spec or DisturbanceSpec()
    controllers = controllers or {"mpc": MPCController(), "lmpc": LMPCController()}
    rows = []
    for seed in range(seeds):
        dist = replace(spec, seed=seed)
        for name, ctrl in controllers.items():
            res = rolling_run(scenario, ctrl, replan_interval, dist, dt_int)
            rows.append({
                "seed": seed, "controller": name, "penalty_Kh": res.penalty,
                "total_kWh": res.energy.total / 1000.0,
            })
    return rows


def mean_by_controller(rows, key):
    out = {}
    for name in dict.fromkeys(r["controller"] for r in rows):
        out[name] = float(np.mean([r[key] for r in rows if r["controller"] == name]))
    return out
