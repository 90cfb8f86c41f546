"""Comfort bands, the CO2-driven minimum ventilation rate and the comfort penalty."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import ComfortSpec, ExogenousSeries


@dataclass(frozen=True, eq=False)
class ComfortBounds:
    """Temperature band and minimum ventilation; scalars or per-step arrays."""

    T_lo: np.ndarray | float
    T_hi: np.ndarray | float
    Q_lo: np.ndarray | float

    def __post_init__(self):
        if np.any(np.asarray(self.T_lo) >= np.asarray(self.T_hi)):
            raise DomainError("comfort band is empty (T_lo >= T_hi)")
        if np.any(np.asarray(self.Q_lo) < 0):
            raise DomainError("minimum ventilation must be >= 0")

    def as_tuple(self):
        return (self.T_lo, self.T_hi, self.Q_lo)


def min_ventilation(N_oc, comfort: ComfortSpec):
    """Ventilation mass flow [kg/s] that holds CO2 at ``nu_max`` for ``N_oc`` occupants.

    Infiltration is ignored, so the value is conservative.
    """
    if comfort.nu_max <= comfort.nu_env:
        raise DomainError("nu_max must exceed nu_env")
    N = np.asarray(N_oc, dtype=float)
    Q = N * comfort.Q_co2 / (comfort.nu_max - comfort.nu_env)
    return float(Q) if Q.ndim == 0 else Q


def comfort_bounds(N_oc, comfort: ComfortSpec) -> ComfortBounds:
    """Occupied band ``T_comf +/- band``; wider vacant band when nobody is in."""
    N = np.asarray(N_oc, dtype=float)
    occupied = N > 0
    T_lo = np.where(occupied, comfort.T_comf - comfort.band, comfort.T_lo_vacant)
    T_hi = np.where(occupied, comfort.T_comf + comfort.band, comfort.T_hi_vacant)
    Q_lo = min_ventilation(N, comfort)
    if N.ndim == 0:
        return ComfortBounds(float(T_lo), float(T_hi), float(Q_lo))
    return ComfortBounds(T_lo, T_hi, Q_lo)


def band_violation(T, T_lo, T_hi):
    """Distance of ``T`` outside ``[T_lo, T_hi]`` (zero inside)."""
    return np.maximum(0.0, T_lo - T) + np.maximum(0.0, T - T_hi)


def temperature_penalty(traj, exo: ExogenousSeries, comfort: ComfortSpec) -> float:
    """Time-integrated band violation [K h], left-rectangle rule on the trajectory grid.

    The band at each sample follows the occupancy forecast at that instant.
    """
    t = np.asarray(traj.t)
    if len(t) < 2:
        return 0.0
    if not exo.covers(t[0], t[-1]):
        raise DomainError("trajectory and occupancy series are not time-aligned")
    bounds = comfort_bounds(exo.N_oc_at(t[:-1]), comfort)
    excess = band_violation(np.asarray(traj.T)[:-1], bounds.T_lo, bounds.T_hi)
    return float(np.sum(excess * np.diff(t)) / 3600.0)
