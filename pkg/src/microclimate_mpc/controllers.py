"""Control policies behind a common estimator interface.

``fit(scenario)`` binds a controller to a room, comfort band and
forecast; ``predict(state, t0)`` returns the :class:`ControlSchedule` to
apply from absolute time ``t0``. The on/off thermostat is a finite-state
machine and is queried once per integration step; the planners return a
whole horizon of hourly moves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .comfort import comfort_bounds
from .cost import DEFAULT_SLACK_WEIGHT
from .errors import DomainError
from .model import PPM, ComfortSpec, ControlSchedule, ExogenousSeries, MicroclimateState, RoomParams
from .mpc import solve_lmpc, solve_mpc, steps_until

DAY = 86400.0
DAY_TYPES = ("cold", "mild", "hot")

VENT_ON_PPM = 950.0
VENT_OFF_PPM = 850.0
REGIMES = 10


@dataclass(frozen=True)
class OnOffMode:
    """Hysteresis state of the thermostat and the CO2 switch."""

    heating: bool = False
    cooling: bool = False
    vent: bool = False


def power_regime(T, T_set, band):
    """Power level 0..10 proportional to the distance from the set bound."""
    return min(REGIMES, math.ceil(REGIMES * abs(T_set - T) / band - 1e-12))


def onoff_decide(
    s: MicroclimateState,
    N_oc,
    params: RoomParams,
    comfort: ComfortSpec,
    prev_mode: OnOffMode | None = None,
    day_type: str = "cold",
):
    """One thermostat decision: ``(W, Q, mode)``.

    Heating switches on below the lower comfort bound and off once the
    setpoint is reached; cooling mirrors this at the upper bound. While
    switched on the power level is at least 1.
    """
    mode = prev_mode or OnOffMode()
    bounds = comfort_bounds(N_oc, comfort)
    T = s.T
    heating = (T < bounds.T_lo) or (mode.heating and T < comfort.T_comf)
    cooling = (T > bounds.T_hi) or (mode.cooling and T > comfort.T_comf)
    if day_type in ("mild", "hot") and N_oc <= 0:
        heating = cooling = False

    W = 0.0
    if heating:
        r = max(1, power_regime(T, bounds.T_lo, comfort.band))
        W = r * params.W_max / REGIMES
    elif cooling:
        r = max(1, power_regime(T, bounds.T_hi, comfort.band))
        W = r * params.W_min / REGIMES

    ppm = s.nu_co2 / PPM
    vent = ppm >= VENT_ON_PPM or (mode.vent and ppm > VENT_OFF_PPM)
    Q = params.Q_max if vent else 0.0
    return W, Q, OnOffMode(heating, cooling, vent)


def _check_scenario(scenario):
    for attr in ("params", "comfort", "exo"):
        if not hasattr(scenario, attr):
            raise DomainError(f"scenario lacks '{attr}'")
    if not isinstance(scenario.params, RoomParams):
        raise DomainError("scenario.params must be RoomParams")
    if not isinstance(scenario.exo, ExogenousSeries):
        raise DomainError("scenario.exo must be an ExogenousSeries")
    return scenario


class _Controller(BaseEstimator):
    tag = "base"
    #: query interval; ``None`` means "as often as the harness replans"
    decides_every_step = False

    def fit(self, scenario):
        _check_scenario(scenario)
        self.params_ = scenario.params
        self.comfort_ = scenario.comfort
        self.exo_ = scenario.exo
        self.day_type_ = getattr(scenario, "day_type", "cold")
        self.day_end_ = DAY * (math.floor(scenario.exo.start / DAY + 1e-9) + 1)
        self.reset()
        return self

    def reset(self):
        """Forget run-specific memory (warm starts, hysteresis)."""

    def _fitted(self):
        if not hasattr(self, "params_"):
            raise DomainError(f"{type(self).__name__} is not fitted; call fit(scenario) first")


class _Planner(_Controller):
    def _window(self, t0, exo):
        """Number of steps and end time of the planning window starting at ``t0``."""
        if self.horizon is None:
            t_end = self.day_end_
            if t0 >= t_end - 1e-9:
                raise DomainError("no time left before the end of the day")
            return steps_until(t0, t_end, self.step), t_end
        if self.horizon < 1:
            raise DomainError(f"horizon must be >= 1 step, got {self.horizon}")
        t_end = min(exo.end, t0 + self.horizon * self.step)
        return self.horizon, t_end

    def reset(self):
        self.last_result_ = None
        self.last_t0_ = None

    def predict(self, state: MicroclimateState, t0=0.0, exo: ExogenousSeries | None = None):
        self._fitted()
        exo = exo if exo is not None else self.exo_
        H, t_end = self._window(t0, exo)
        result = self._solve(state, exo, H, float(t0), t_end)
        self.last_result_, self.last_t0_ = result, float(t0)
        return result.schedule


class MPCController(_Planner):
    """Nonlinear MPC.

    ``horizon=None`` plans to the end of the day (shrinking horizon); an
    integer fixes the window length in steps.
    """

    tag = "mpc"

    def __init__(self, horizon=None, step=3600.0, dt_int=60.0, slack_weight=DEFAULT_SLACK_WEIGHT, n_starts=3):
        self.horizon = horizon
        self.step = step
        self.dt_int = dt_int
        self.slack_weight = slack_weight
        self.n_starts = n_starts

    def _solve(self, state, exo, H, t0, t_end):
        prev = self.last_result_
        return solve_mpc(
            state, exo, self.params_, self.comfort_, H, t0=t0, step=self.step, dt_int=self.dt_int,
            t_limit=t_end, slack_weight=self.slack_weight, n_starts=self.n_starts,
            warm_start=None if prev is None else prev.schedule, warm_start_t0=self.last_t0_,
        )


class LMPCController(_Planner):
    """Linearised MPC solved as a single LP per replan."""

    tag = "lmpc"

    def __init__(self, horizon=None, step=3600.0, slack_weight=DEFAULT_SLACK_WEIGHT):
        self.horizon = horizon
        self.step = step
        self.slack_weight = slack_weight

    def _solve(self, state, exo, H, t0, t_end):
        return solve_lmpc(
            state, exo, self.params_, self.comfort_, H, t0=t0, step=self.step,
            t_limit=t_end, slack_weight=self.slack_weight,
        )


class OnOffController(_Controller):
    """Quantised thermostat with CO2-driven ventilation; decides every integration step."""

    tag = "onoff"
    decides_every_step = True

    def __init__(self, dt_int=60.0):
        self.dt_int = dt_int

    def reset(self):
        self.mode_ = OnOffMode()

    def predict(self, state: MicroclimateState, t0=0.0, exo: ExogenousSeries | None = None):
        self._fitted()
        exo = exo if exo is not None else self.exo_
        W, Q, self.mode_ = onoff_decide(
            state, float(exo.N_oc_at(t0)), self.params_, self.comfort_, self.mode_, self.day_type_
        )
        return ControlSchedule(np.array([W]), np.array([Q]), step_duration=self.dt_int)


CONTROLLERS = {"mpc": MPCController, "lmpc": LMPCController, "onoff": OnOffController}


def make_controller(name, **kwargs):
    try:
        return CONTROLLERS[name](**kwargs)
    except KeyError:
        raise DomainError(f"unknown controller '{name}' (choose from {', '.join(CONTROLLERS)})") from None
