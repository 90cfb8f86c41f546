"""Forward integration of the coupled air / inertia-mass / CO2 room model.

The plant is integrated with the explicit (forward) Euler scheme. Air mass is
recomputed from the current air temperature at every step, so the model is
nonlinear in ``T`` and bilinear in ``Q * T``.

The inner loops are compiled with numba; the Python wrappers do the
validation and unit handling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._validation import check_multiple, check_positive
from .errors import ConvergenceError, DomainError
from .model import (
    KELVIN,
    ComfortSpec,
    ControlSchedule,
    ExogenousSeries,
    MicroclimateState,
    RoomParams,
    air_mass,
)

# layout of the packed constant vector handed to the compiled kernels
_U, _US, _MCS, _PVR, _RR, _WOC, _TIN, _CP, _NUENV, _QCO2 = range(10)


def pack_constants(params: RoomParams, comfort: ComfortSpec):
    return np.array(
        [
            params.U,
            params.U_star,
            params.mC_star,
            params.P_atm * params.V / params.R_gas,
            params.infiltration_rate,
            params.W_oc,
            params.T_in,
            params.C_p,
            comfort.nu_env,
            comfort.Q_co2,
        ]
    )


@njit(cache=True)
def _euler_step(T, Ts, nu, W, Q, To, N, c, dt):
    m = c[_PVR] / (T + KELVIN)
    flux = (
        c[_U] * (To - T)
        + c[_US] * (Ts - T)
        + c[_WOC] * N
        + W
        + c[_CP] * Q * (c[_TIN] - T)
        + c[_CP] * m * c[_RR] * (To - T)
    )
    T1 = T + dt * flux / (m * c[_CP])
    Ts1 = Ts - dt * c[_US] * (Ts - T) / c[_MCS]
    co2 = N * c[_QCO2] + Q * (c[_NUENV] - nu) + m * c[_RR] * (c[_NUENV] - nu)
    nu1 = nu + dt * co2 / m
    return T1, Ts1, nu1


@njit(cache=True)
def _integrate(T0, Ts0, nu0, W, Q, To, N, c, dt):
    n = W.shape[0]
    T = np.empty(n + 1)
    Ts = np.empty(n + 1)
    nu = np.empty(n + 1)
    T[0], Ts[0], nu[0] = T0, Ts0, nu0
    for i in range(n):
        T[i + 1], Ts[i + 1], nu[i + 1] = _euler_step(
            T[i], Ts[i], nu[i], W[i], Q[i], To[i], N[i], c, dt
        )
    return T, Ts, nu


@njit(cache=True)
def _integrate_sensitivities(T0, Ts0, W, Q, nsub, To, N, c, dt):
    """Air temperature at each control-step end and its Jacobian w.r.t. (W, Q).

    ``W``/``Q`` hold one value per control step, ``nsub`` the number of
    integration steps in each control step and ``To``/``N`` one value per
    integration step. Returns ``(T_end, dT_dW, dT_dQ)`` where
    ``dT_dW[k, j] = d T_end[k] / d W[j]``.
    """
    H = W.shape[0]
    T_end = np.empty(H)
    dT_dW = np.zeros((H, H))
    dT_dQ = np.zeros((H, H))
    sT_W = np.zeros(H)
    sTs_W = np.zeros(H)
    sT_Q = np.zeros(H)
    sTs_Q = np.zeros(H)
    T = T0
    Ts = Ts0
    cp = c[_CP]
    inv_pvr_cp = 1.0 / (c[_PVR] * cp)
    i = 0
    for j in range(H):
        for _ in range(nsub[j]):
            k = (T + KELVIN) * inv_pvr_cp  # 1 / (m C_p)
            rest = (
                c[_U] * (To[i] - T)
                + c[_US] * (Ts - T)
                + c[_WOC] * N[i]
                + W[j]
                + cp * Q[j] * (c[_TIN] - T)
            )
            a = 1.0 + dt * (rest * inv_pvr_cp - k * (c[_U] + c[_US] + cp * Q[j]) - c[_RR])
            b = dt * k * c[_US]
            g = dt * c[_US] / c[_MCS]
            d = 1.0 - g
            for col in range(j + 1):
                tw = a * sT_W[col] + b * sTs_W[col]
                sTs_W[col] = g * sT_W[col] + d * sTs_W[col]
                sT_W[col] = tw
                tq = a * sT_Q[col] + b * sTs_Q[col]
                sTs_Q[col] = g * sT_Q[col] + d * sTs_Q[col]
                sT_Q[col] = tq
            sT_W[j] += dt * k
            sT_Q[j] += dt * k * cp * (c[_TIN] - T)
            T1 = T + dt * (k * rest + c[_RR] * (To[i] - T))
            Ts = Ts - dt * c[_US] * (Ts - T) / c[_MCS]
            T = T1
            i += 1
        T_end[j] = T
        for col in range(j + 1):
            dT_dW[j, col] = sT_W[col]
            dT_dQ[j, col] = sT_Q[col]
    return T_end, dT_dW, dT_dQ


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States sampled on a uniform integration grid.

    ``T``, ``T_star`` and ``nu_co2`` have one more entry than ``applied_W`` and
    ``applied_Q``: the controls act on the interval following each sample.
    """

    t: np.ndarray
    T: np.ndarray
    T_star: np.ndarray
    nu_co2: np.ndarray
    applied_W: np.ndarray
    applied_Q: np.ndarray

    def __post_init__(self):
        n = len(self.applied_W)
        if not (len(self.t) == len(self.T) == len(self.T_star) == len(self.nu_co2) == n + 1):
            raise DomainError("trajectory arrays have inconsistent lengths")
        if len(self.applied_Q) != n:
            raise DomainError("applied_W and applied_Q differ in length")

    def __len__(self):
        return len(self.t)

    @property
    def dt(self):
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    @property
    def final_state(self):
        return self.state(-1)

    def state(self, i):
        return MicroclimateState(float(self.T[i]), float(self.T_star[i]), float(self.nu_co2[i]))

    @property
    def states(self):
        return [self.state(i) for i in range(len(self.t))]

    def schedule(self):
        """The realized controls as a schedule on the integration grid."""
        return ControlSchedule(self.applied_W, self.applied_Q, step_duration=self.dt or 1.0)

    @classmethod
    def empty(cls, state: MicroclimateState, t0=0.0):
        return cls(
            np.array([t0]),
            np.array([state.T]),
            np.array([state.T_star]),
            np.array([state.nu_co2]),
            np.empty(0),
            np.empty(0),
        )

    def extend(self, other: Trajectory):
        """Append ``other``, whose first sample must coincide with our last."""
        if abs(other.t[0] - self.t[-1]) > 1e-6:
            raise DomainError("trajectories are not contiguous in time")
        return Trajectory(
            np.concatenate((self.t, other.t[1:])),
            np.concatenate((self.T, other.T[1:])),
            np.concatenate((self.T_star, other.T_star[1:])),
            np.concatenate((self.nu_co2, other.nu_co2[1:])),
            np.concatenate((self.applied_W, other.applied_W)),
            np.concatenate((self.applied_Q, other.applied_Q)),
        )


def step_state(
    s: MicroclimateState,
    W: float,
    Q: float,
    T_out: float,
    N_oc: float,
    params: RoomParams,
    comfort: ComfortSpec,
    dt: float,
) -> MicroclimateState:
    """One explicit Euler step of the room model."""
    if not dt > 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    if Q < 0:
        raise DomainError(f"ventilation flow must be >= 0, got {Q}")
    air_mass(params, s.T)  # rejects non-physical temperatures
    T1, Ts1, nu1 = _euler_step(
        s.T, s.T_star, s.nu_co2, float(W), float(Q), float(T_out), float(N_oc),
        pack_constants(params, comfort), float(dt),
    )
    return MicroclimateState(T1, Ts1, nu1)


def expand_schedule(schedule: ControlSchedule, dt_int: float):
    """Per-integration-step W and Q arrays plus the substep count of each control step."""
    nsub = np.array(
        [check_multiple(d, dt_int, "control step") for d in schedule.step_durations],
        dtype=np.int64,
    )
    return np.repeat(schedule.W, nsub), np.repeat(schedule.Q, nsub), nsub


def simulate(
    s0: MicroclimateState,
    schedule: ControlSchedule,
    exo: ExogenousSeries,
    params: RoomParams,
    comfort: ComfortSpec,
    dt_int: float = 60.0,
    t0: float = 0.0,
) -> Trajectory:
    """Integrate the plant under ``schedule`` starting at absolute time ``t0``."""
    check_positive(dt_int, "dt_int")
    W, Q, _ = expand_schedule(schedule, dt_int)
    if np.any(Q < 0):
        raise DomainError("ventilation flow must be >= 0")
    n = len(W)
    t = t0 + dt_int * np.arange(n + 1)
    exo.require(t0, t[-1])
    To = exo.T_out_at(t[:-1]) if n else np.empty(0)
    N = exo.N_oc_at(t[:-1]) if n else np.empty(0)
    T, Ts, nu = _integrate(
        float(s0.T), float(s0.T_star), float(s0.nu_co2), W, Q, To, N,
        pack_constants(params, comfort), float(dt_int),
    )
    if not np.all(np.isfinite(T)) or np.any(T <= -KELVIN):
        raise DomainError("integration diverged; reduce dt_int")
    return Trajectory(t, T, Ts, nu, W, Q)


def steady_state(
    W: float,
    Q: float,
    T_out: float,
    N_oc: float,
    params: RoomParams,
    comfort: ComfortSpec,
    tol: float = 1e-9,
    max_iter: int = 100,
) -> MicroclimateState:
    """Equilibrium of the room model under constant inputs (inertia mass at air temperature)."""
    Cp, Rr = params.C_p, params.infiltration_rate
    T = T_out
    for _ in range(max_iter):
        m = air_mass(params, T)
        conductance = params.U + Cp * Q + Cp * m * Rr
        if conductance <= 0:
            raise DomainError("steady state undefined: no heat exchange with the outside")
        heat = params.U * T_out + params.W_oc * N_oc + W + Cp * Q * params.T_in + Cp * m * Rr * T_out
        T_new = heat / conductance
        if abs(T_new - T) <= tol:
            T = T_new
            break
        T = T_new
    else:
        raise ConvergenceError(f"steady state did not converge in {max_iter} iterations")
    m = air_mass(params, T)
    dilution = Q + m * Rr
    if dilution > 0:
        nu = comfort.nu_env + N_oc * comfort.Q_co2 / dilution
    elif N_oc == 0:
        nu = comfort.nu_env
    else:
        raise DomainError("CO2 has no steady state: occupants present and no air exchange")
    return MicroclimateState(T, T, nu)
