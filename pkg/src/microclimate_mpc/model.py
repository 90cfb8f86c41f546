"""Domain types and physical constants for a single-zone room.

Units are SI throughout: seconds, watts, joules, kilograms and CO2 as a mass
fraction. Temperatures are kept in degrees Celsius because the model only
uses differences and the affine conversion inside :func:`air_mass`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    as_float_array,
    check_finite,
    check_positive,
    check_same_length,
)
from .errors import DomainError

KELVIN = 273.15
PPM = 1e-6


@dataclass(frozen=True)
class MicroclimateState:
    """Plant state: air temperature, inertia-mass temperature, CO2 mass fraction."""

    T: float
    T_star: float
    nu_co2: float

    def __post_init__(self):
        check_finite(self.T, "T")
        check_finite(self.T_star, "T_star")
        if not np.isfinite(self.nu_co2) or self.nu_co2 < 0:
            raise DomainError(f"nu_co2 must be finite and >= 0, got {self.nu_co2}")

    @property
    def co2_ppm(self):
        return self.nu_co2 / PPM

    def as_tuple(self):
        return (self.T, self.T_star, self.nu_co2)


@dataclass(frozen=True)
class RoomParams:
    """Physical and equipment constants of one zone.

    ``R_r`` is given per hour as in the usual tables; the per-second rate is
    derived once at construction and exposed as ``infiltration_rate``.
    ``S_p`` may be ``None`` for rooms without a ventilation system.
    """

    U: float
    U_star: float
    mC_star: float
    V: float
    R_r: float
    W_min: float
    W_max: float
    W_oc: float
    Q_max: float = 0.0
    T_in: float = 21.0
    S_p: float | None = None
    C_p: float = 1000.0
    rho: float = 1.2
    P_atm: float = 1e5
    R_gas: float = 287.03
    infiltration_rate: float = field(init=False, repr=False)

    def __post_init__(self):
        check_positive(self.U, "U")
        check_positive(self.U_star, "U_star")
        check_positive(self.mC_star, "mC_star")
        check_positive(self.V, "V")
        check_positive(self.R_r, "R_r", strict=False)
        check_positive(self.Q_max, "Q_max", strict=False)
        check_finite(self.T_in, "T_in")
        check_finite(self.W_oc, "W_oc")
        for name in ("C_p", "rho", "P_atm", "R_gas"):
            check_positive(getattr(self, name), name)
        if not (self.W_min <= 0 <= self.W_max):
            raise DomainError(f"need W_min <= 0 <= W_max, got [{self.W_min}, {self.W_max}]")
        if self.Q_max > 0 and (self.S_p is None or self.S_p <= 0):
            raise DomainError("S_p must be > 0 when the room has ventilation (Q_max > 0)")
        object.__setattr__(self, "infiltration_rate", self.R_r / 3600.0)

    @property
    def has_ventilation(self):
        return self.Q_max > 0

    @property
    def fan_coefficient(self):
        """Fan propulsion coefficient alpha = (2 S_p rho)^-2."""
        if self.S_p is None or self.S_p <= 0:
            raise DomainError("fan coefficient undefined: room has no inflow pipe (S_p)")
        return (2.0 * self.S_p * self.rho) ** -2


@dataclass(frozen=True)
class ComfortSpec:
    T_comf: float = 22.0
    band: float = 1.0
    T_lo_vacant: float = 15.0
    T_hi_vacant: float = 25.0
    nu_max: float = 1000 * PPM
    nu_env: float = 400 * PPM
    Q_co2: float = 1.2e-5

    def __post_init__(self):
        check_positive(self.band, "band")
        check_positive(self.Q_co2, "Q_co2", strict=False)
        if self.T_lo_vacant > self.T_comf - self.band:
            raise DomainError("vacant lower bound must not exceed T_comf - band")
        if self.T_comf + self.band > self.T_hi_vacant:
            raise DomainError("vacant upper bound must not be below T_comf + band")
        if not (0 <= self.nu_env < self.nu_max):
            raise DomainError("need 0 <= nu_env < nu_max")


def air_mass(params: RoomParams, T: float) -> float:
    """Mass of room air [kg] from the ideal-gas law at temperature ``T`` [degC]."""
    T_abs = T + KELVIN
    if not np.isfinite(T_abs) or T_abs <= 0:
        raise DomainError(f"non-physical temperature {T} degC")
    return params.P_atm * params.V / (params.R_gas * T_abs)


@dataclass(frozen=True, eq=False)
class ExogenousSeries:
    """Forecast of outside temperature and occupancy on a time grid.

    Values hold piecewise-constant from each grid point until the next one
    (left interpolation). The series covers ``[t_grid[0], t_grid[-1]]``.
    """

    t_grid: np.ndarray
    T_out: np.ndarray
    N_oc: np.ndarray

    def __post_init__(self):
        t = as_float_array(self.t_grid, "t_grid")
        T_out = as_float_array(self.T_out, "T_out")
        N_oc = as_float_array(self.N_oc, "N_oc")
        check_same_length("t_grid", t, "T_out", T_out)
        check_same_length("t_grid", t, "N_oc", N_oc)
        if len(t) == 0:
            raise DomainError("empty series")
        if np.any(np.diff(t) <= 0):
            raise DomainError("t_grid must be strictly increasing")
        if np.any(N_oc < 0):
            raise DomainError("occupancy must be non-negative")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "T_out", T_out)
        object.__setattr__(self, "N_oc", N_oc)

    @property
    def start(self):
        return float(self.t_grid[0])

    @property
    def end(self):
        return float(self.t_grid[-1])

    def covers(self, t0, t1):
        return self.start <= t0 + 1e-9 and t1 <= self.end + 1e-9

    def require(self, t0, t1):
        if not self.covers(t0, t1):
            raise DomainError(
                f"forecast covers [{self.start}, {self.end}] s but [{t0}, {t1}] s is needed"
            )

    def _index(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.start - 1e-9) or np.any(t > self.end + 1e-9):
            raise DomainError(f"time outside forecast range [{self.start}, {self.end}] s")
        # tolerate float noise right below a grid point
        idx = np.searchsorted(self.t_grid, t + 1e-9, side="right") - 1
        return np.clip(idx, 0, len(self.t_grid) - 1)

    def T_out_at(self, t):
        return self.T_out[self._index(t)]

    def N_oc_at(self, t):
        return self.N_oc[self._index(t)]

    def window(self, t0, t1=None):
        """Sub-series restricted to ``[t0, t1]`` with a grid point inserted at ``t0``."""
        t1 = self.end if t1 is None else min(t1, self.end)
        self.require(t0, t1)
        inner = self.t_grid[(self.t_grid > t0 + 1e-9) & (self.t_grid < t1 - 1e-9)]
        t = np.concatenate(([t0], inner, [t1] if t1 > t0 + 1e-9 else []))
        return ExogenousSeries(t, self.T_out_at(t), self.N_oc_at(t))

    def with_first(self, T_out=None, N_oc=None):
        """Copy with the first sample replaced (used for forecast perturbation)."""
        T = self.T_out.copy()
        N = self.N_oc.copy()
        if T_out is not None:
            T[0] = T_out
        if N_oc is not None:
            N[0] = N_oc
        return ExogenousSeries(self.t_grid, T, N)


@dataclass(frozen=True, eq=False)
class ControlSchedule:
    """Heating/cooling power and ventilation flow held constant per control step.

    Steps are ``step_duration`` long unless ``durations`` gives each step
    explicitly (used when a plan starts between hour boundaries).
    """

    W: np.ndarray
    Q: np.ndarray
    step_duration: float = 3600.0
    durations: np.ndarray | None = None

    def __post_init__(self):
        W = as_float_array(self.W, "W")
        Q = as_float_array(self.Q, "Q")
        check_same_length("W", W, "Q", Q)
        check_positive(self.step_duration, "step_duration")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "Q", Q)
        if self.durations is not None:
            d = as_float_array(self.durations, "durations")
            check_same_length("W", W, "durations", d)
            if np.any(d <= 0):
                raise DomainError("step durations must be positive")
            object.__setattr__(self, "durations", d)

    def __len__(self):
        return len(self.W)

    @property
    def step_durations(self):
        if self.durations is not None:
            return self.durations
        return np.full(len(self.W), float(self.step_duration))

    @property
    def total_duration(self):
        return float(np.sum(self.step_durations))

    @property
    def boundaries(self):
        """Step boundary offsets from the schedule start, length ``len(self) + 1``."""
        return np.concatenate(([0.0], np.cumsum(self.step_durations)))

    def validate(self, params: RoomParams, rtol=1e-9):
        """Raise :class:`DomainError` if any step violates the equipment bounds."""
        w_tol = rtol * max(1.0, params.W_max, -params.W_min)
        q_tol = rtol * max(1.0, params.Q_max)
        bad_W = np.flatnonzero((self.W < params.W_min - w_tol) | (self.W > params.W_max + w_tol))
        if bad_W.size:
            k = bad_W[0]
            raise DomainError(
                f"W[{k}]={self.W[k]} outside [{params.W_min}, {params.W_max}]"
            )
        bad_Q = np.flatnonzero((self.Q < -q_tol) | (self.Q > params.Q_max + q_tol))
        if bad_Q.size:
            k = bad_Q[0]
            raise DomainError(f"Q[{k}]={self.Q[k]} outside [0, {params.Q_max}]")
        return self

    def head(self, duration):
        """Schedule truncated to its first ``duration`` seconds."""
        bounds = self.boundaries
        out_W, out_Q, out_d = [], [], []
        for k in range(len(self)):
            if bounds[k] >= duration - 1e-9:
                break
            out_W.append(self.W[k])
            out_Q.append(self.Q[k])
            out_d.append(min(bounds[k + 1], duration) - bounds[k])
        return ControlSchedule(out_W, out_Q, self.step_duration, np.array(out_d))
