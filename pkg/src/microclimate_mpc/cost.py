"""Energy-consumption objective.

Per control step the consumed power is

    |W| + C_p Q |T_in - T_out| + alpha Q^3

(heating/cooling, conditioning of the supply air, fan propulsion), integrated
over the step length and reported in watt-hours.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import ControlSchedule, ExogenousSeries, RoomParams

# Wh charged per K h of comfort slack in the optimizers
DEFAULT_SLACK_WEIGHT = 1e5


@dataclass(frozen=True)
class EnergyBreakdown:
    heat_cool: float
    vent_thermal: float
    vent_fan: float

    def __post_init__(self):
        for name in ("heat_cool", "vent_thermal", "vent_fan"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")

    @property
    def total(self):
        return self.heat_cool + self.vent_thermal + self.vent_fan

    @property
    def ventilation(self):
        return self.vent_thermal + self.vent_fan

    def to_kwh(self):
        return {
            "heat_cool_kWh": self.heat_cool / 1000.0,
            "vent_thermal_kWh": self.vent_thermal / 1000.0,
            "vent_fan_kWh": self.vent_fan / 1000.0,
            "total_kWh": self.total / 1000.0,
        }


def step_power_terms(W, Q, T_out, params: RoomParams):
    """The three power terms [W] for arrays of per-step controls and outside temperatures."""
    W = np.asarray(W, dtype=float)
    Q = np.asarray(Q, dtype=float)
    heat_cool = np.abs(W)
    vent_thermal = params.C_p * Q * np.abs(params.T_in - np.asarray(T_out, dtype=float))
    if np.any(Q > 0):
        vent_fan = params.fan_coefficient * Q**3
    else:
        vent_fan = np.zeros_like(Q)
    return heat_cool, vent_thermal, vent_fan


def energy_objective(
    schedule: ControlSchedule,
    exo: ExogenousSeries,
    params: RoomParams,
    t0: float = 0.0,
    weights=None,
) -> EnergyBreakdown:
    """Energy [Wh] consumed by ``schedule`` started at absolute time ``t0``.

    The outside temperature of each step is the forecast value at the step's
    start. ``weights`` optionally scales each step (tariffs, primary-energy
    factors); unit weights reproduce plain energy.
    """
    if len(schedule) == 0:
        return EnergyBreakdown(0.0, 0.0, 0.0)
    starts = t0 + schedule.boundaries[:-1]
    exo.require(t0, t0 + schedule.total_duration)
    hc, vt, vf = step_power_terms(schedule.W, schedule.Q, exo.T_out_at(starts), params)
    hours = schedule.step_durations / 3600.0
    if weights is not None:
        hours = hours * np.asarray(weights, dtype=float)
    return EnergyBreakdown(
        float(np.sum(hc * hours)), float(np.sum(vt * hours)), float(np.sum(vf * hours))
    )
