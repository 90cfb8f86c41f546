"""Finite-horizon planning problems: nonlinear MPC (solved by SLP) and linearised MPC (an LP).

Both planners work on a control grid aligned to whole ``step`` boundaries:
a plan that starts mid-hour gets a shorter first step so that every
constraint point falls on an hour boundary, where the occupancy forecast and
therefore the comfort band may change. The temperature at the end of step
``k`` must lie in the band of step ``k`` and of step ``k + 1``.

Comfort bounds are soft: ``s_lo``/``s_hi`` slacks (K) are priced at
``slack_weight`` Wh per K h.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_multiple
from .comfort import comfort_bounds, min_ventilation
from .cost import DEFAULT_SLACK_WEIGHT, step_power_terms
from .dynamics import _integrate_sensitivities, pack_constants
from .errors import DomainError, SolverError
from .lp import LinearProgram, solve_lp
from .model import ComfortSpec, ControlSchedule, ExogenousSeries, MicroclimateState, RoomParams, air_mass
from .slp import CONVERGED, Evaluation, SlpOptions, solve_slp


def control_grid(t0, horizon, step=3600.0, t_limit=None):
    """Durations of up to ``horizon`` control steps starting at ``t0``.

    The first step runs to the next multiple of ``step``; the grid is cut
    at ``t_limit`` when given.
    """
    if horizon < 1:
        raise DomainError(f"horizon must be >= 1 step, got {horizon}")
    first_end = (np.floor(t0 / step + 1e-9) + 1.0) * step
    ends = first_end + step * np.arange(horizon)
    if t_limit is not None:
        if t_limit <= t0 + 1e-9:
            raise DomainError("planning window is empty")
        ends = ends[ends < t_limit - 1e-9]
        ends = np.append(ends, t_limit) if len(ends) < horizon else ends
    edges = np.concatenate(([t0], ends))
    return np.diff(edges)


def steps_until(t0, t_end, step=3600.0):
    """Number of grid steps needed to reach ``t_end`` from ``t0``."""
    first_end = (np.floor(t0 / step + 1e-9) + 1.0) * step
    if t_end <= first_end + 1e-9:
        return 1
    return 1 + int(np.ceil((t_end - first_end) / step - 1e-9))


@dataclass(frozen=True, eq=False)
class StepForecast:
    """Per-control-step quantities derived from the forecast."""

    durations: np.ndarray
    starts: np.ndarray
    T_out: np.ndarray
    N_oc: np.ndarray
    T_lo: np.ndarray
    T_hi: np.ndarray
    Q_lo: np.ndarray

    @property
    def horizon(self):
        return len(self.durations)

    @property
    def hours(self):
        return self.durations / 3600.0


def step_forecast(exo: ExogenousSeries, params: RoomParams, comfort: ComfortSpec, t0, durations):
    durations = np.asarray(durations, dtype=float)
    edges = t0 + np.concatenate(([0.0], np.cumsum(durations)))
    exo.require(edges[0], edges[-1])
    starts = edges[:-1]
    N = exo.N_oc_at(starts)
    band = comfort_bounds(N, comfort)
    # band in force right after each step end (the last one repeats itself)
    N_next = np.append(N[1:], exo.N_oc_at(edges[-1]))
    band_next = comfort_bounds(N_next, comfort)
    T_lo = np.maximum(band.T_lo, band_next.T_lo)
    T_hi = np.minimum(band.T_hi, band_next.T_hi)
    Q_lo = np.minimum(min_ventilation(N, comfort), params.Q_max)
    return StepForecast(durations, starts, exo.T_out_at(starts), N, T_lo, T_hi, Q_lo)


class MpcProblem:
    """Nonlinear MPC problem in the decision vector ``[W+, W-, Q, s_lo, s_hi]`` (5 per step).

    The air temperature at each step end is obtained by integrating the full
    nonlinear model on the ``dt_int`` grid (single shooting); its Jacobian
    with respect to the controls comes from forward sensitivities.
    """

    def __init__(
        self,
        s0: MicroclimateState,
        exo: ExogenousSeries,
        params: RoomParams,
        comfort: ComfortSpec,
        durations,
        t0=0.0,
        dt_int=60.0,
        slack_weight=DEFAULT_SLACK_WEIGHT,
        weights=None,
    ):
        air_mass(params, s0.T)
        self.s0, self.params, self.comfort = s0, params, comfort
        self.t0, self.dt_int = float(t0), float(dt_int)
        self.slack_weight = float(slack_weight)
        self.fc = step_forecast(exo, params, comfort, t0, durations)
        H = self.H = self.fc.horizon
        self.nsub = np.array(
            [check_multiple(d, dt_int, "control step") for d in self.fc.durations], dtype=np.int64
        )
        t_sub = self.t0 + dt_int * np.arange(int(self.nsub.sum()))
        self.To_sub = exo.T_out_at(t_sub)
        self.N_sub = exo.N_oc_at(t_sub)
        self.consts = pack_constants(params, comfort)
        self.energy_hours = self.fc.hours if weights is None else self.fc.hours * np.asarray(weights, float)
        self.alpha = params.fan_coefficient if params.has_ventilation else 0.0
        self.vent_rate = params.C_p * np.abs(params.T_in - self.fc.T_out)

        inf = np.full(H, np.inf)
        zeros = np.zeros(H)
        self.lb = np.concatenate((zeros, zeros, self.fc.Q_lo, zeros, zeros))
        self.ub = np.concatenate((
            np.full(H, params.W_max), np.full(H, -params.W_min), np.full(H, params.Q_max), inf, inf,
        ))
        self.n = 5 * H

    # decision-vector layout
    def split(self, x):
        H = self.H
        return x[:H], x[H:2 * H], x[2 * H:3 * H], x[3 * H:4 * H], x[4 * H:]

    def pack(self, W, Q, s_lo=None, s_hi=None):
        W = np.asarray(W, dtype=float)
        zeros = np.zeros(self.H)
        return np.concatenate((
            np.maximum(W, 0.0), np.maximum(-W, 0.0), np.asarray(Q, dtype=float),
            zeros if s_lo is None else s_lo, zeros if s_hi is None else s_hi,
        ))

    def predict(self, W, Q):
        """End-of-step air temperatures and their sensitivities to W and Q."""
        return _integrate_sensitivities(
            float(self.s0.T), float(self.s0.T_star),
            np.ascontiguousarray(W, dtype=float), np.ascontiguousarray(Q, dtype=float),
            self.nsub, self.To_sub, self.N_sub, self.consts, self.dt_int,
        )

    def energy(self, x):
        Wp, Wm, Q, _, _ = self.split(x)
        power = Wp + Wm + self.vent_rate * Q + self.alpha * Q**3
        return float(np.sum(power * self.energy_hours))

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        H = self.H
        Wp, Wm, Q, s_lo, s_hi = self.split(x)
        hours = self.fc.hours
        f = self.energy(x) + self.slack_weight * float(np.sum(hours * (s_lo + s_hi)))
        grad = np.concatenate((
            self.energy_hours,
            self.energy_hours,
            self.energy_hours * (self.vent_rate + 3.0 * self.alpha * Q**2),
            self.slack_weight * hours,
            self.slack_weight * hours,
        ))
        T_end, dW, dQ = self.predict(Wp - Wm, Q)
        g = np.concatenate((self.fc.T_lo - s_lo - T_end, T_end - self.fc.T_hi - s_hi))
        eye = np.eye(H)
        jac = np.zeros((2 * H, self.n))
        jac[:H, :H] = -dW
        jac[:H, H:2 * H] = dW
        jac[:H, 2 * H:3 * H] = -dQ
        jac[:H, 3 * H:4 * H] = -eye
        jac[H:, :H] = dW
        jac[H:, H:2 * H] = -dW
        jac[H:, 2 * H:3 * H] = dQ
        jac[H:, 4 * H:] = -eye
        return Evaluation(f, grad, g, jac)

    def with_feasible_slacks(self, x):
        """Copy of ``x`` whose slacks exactly cover the predicted band violations."""
        Wp, Wm, Q, _, _ = self.split(x)
        T_end = self.predict(Wp - Wm, Q)[0]
        s_lo = np.maximum(self.fc.T_lo - T_end, 0.0)
        s_hi = np.maximum(T_end - self.fc.T_hi, 0.0)
        return np.concatenate((Wp, Wm, Q, s_lo, s_hi))

    def holding_power(self):
        """Per-step power that keeps a steady room inside its band (ventilation at minimum)."""
        p = self.params
        m = air_mass(p, self.s0.T)
        conductance = p.U + p.C_p * self.fc.Q_lo + p.C_p * m * p.infiltration_rate
        gains = (
            p.W_oc * self.fc.N_oc
            + p.C_p * self.fc.Q_lo * p.T_in
            + (p.U + p.C_p * m * p.infiltration_rate) * self.fc.T_out
        )
        W_lo = conductance * self.fc.T_lo - gains  # power holding the lower bound
        W_hi = conductance * self.fc.T_hi - gains  # power holding the upper bound
        W = np.where(W_lo > 0, W_lo, np.where(W_hi < 0, W_hi, 0.0))
        return np.clip(W, p.W_min, p.W_max)

    def schedule(self, x):
        Wp, Wm, Q, _, _ = self.split(x)
        W = np.clip(Wp - Wm, self.params.W_min, self.params.W_max)
        Q = np.clip(Q, self.fc.Q_lo, self.params.Q_max)
        return ControlSchedule(W, Q, durations=self.fc.durations)

    def tr_scale(self):
        H = self.H
        q_range = max(self.params.Q_max, 1e-3)
        return np.concatenate((
            np.full(H, max(self.params.W_max, 1.0)),
            np.full(H, max(-self.params.W_min, 1.0)),
            np.full(H, q_range),
            np.full(2 * H, np.inf),
        ))


def objective_for_optimizer(x, problem: MpcProblem) -> float:
    """Planner objective: energy [Wh] plus priced comfort slack."""
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise DomainError(f"decision vector has shape {x.shape}, expected ({problem.n},)")
    _, _, _, s_lo, s_hi = problem.split(x)
    return problem.energy(x) + problem.slack_weight * float(np.sum(problem.fc.hours * (s_lo + s_hi)))


@dataclass
class PlanResult:
    schedule: ControlSchedule
    objective: float
    slack: float
    status: str
    iterations: int
    starts: list = field(default_factory=list)


def _warm_start_power(previous: ControlSchedule | None, prev_t0, problem: MpcProblem):
    if previous is None or prev_t0 is None or len(previous) == 0:
        return None
    edges = prev_t0 + previous.boundaries
    starts = problem.fc.starts
    if starts[-1] >= edges[-1] - 1e-9:
        # previous plan does not reach the end of this one; extend with holding power
        tail = problem.holding_power()
    else:
        tail = None
    idx = np.searchsorted(edges, starts + 1e-9, side="right") - 1
    inside = (idx >= 0) & (idx < len(previous))
    W = np.where(inside, previous.W[np.clip(idx, 0, len(previous) - 1)], 0.0)
    if tail is not None:
        W = np.where(inside, W, tail)
    return W


def solve_mpc(
    s0: MicroclimateState,
    exo: ExogenousSeries,
    params: RoomParams,
    comfort: ComfortSpec,
    horizon: int,
    t0=0.0,
    step=3600.0,
    dt_int=60.0,
    t_limit=None,
    slack_weight=DEFAULT_SLACK_WEIGHT,
    n_starts=3,
    warm_start: ControlSchedule | None = None,
    warm_start_t0=None,
    weights=None,
    options: SlpOptions | None = None,
) -> PlanResult:
    """Plan with the full nonlinear model; multi-start SLP, best start wins."""
    durations = control_grid(t0, horizon, step, t_limit)
    problem = MpcProblem(s0, exo, params, comfort, durations, t0, dt_int, slack_weight, weights)
    opts = options or SlpOptions()
    if opts.tr_scale is None:
        opts = SlpOptions(**{**opts.__dict__, "tr_scale": problem.tr_scale()})

    starts = [np.zeros(problem.H), problem.holding_power()]
    warm = _warm_start_power(warm_start, warm_start_t0, problem)
    if warm is not None:
        starts.append(warm)
    starts = starts[:max(1, n_starts)]

    best = None
    summaries = []
    total_iter = 0
    for W0 in starts:
        x0 = problem.with_feasible_slacks(problem.pack(np.clip(W0, params.W_min, params.W_max), problem.fc.Q_lo))
        res = solve_slp(problem, x0, problem.lb, problem.ub, opts)
        total_iter += res.iterations
        summaries.append((res.status, res.f, res.iterations))
        key = (res.violation > opts.feas_tol, res.f)
        if best is None or key < best[0]:
            best = (key, res)
    res = best[1]
    if res.violation > 10 * opts.feas_tol:
        raise SolverError(f"nonlinear MPC found no feasible plan (violation {res.violation:.3g})")
    _, _, _, s_lo, s_hi = problem.split(res.x)
    return PlanResult(
        schedule=problem.schedule(res.x),
        objective=float(res.f),
        slack=float(np.sum(problem.fc.hours * (s_lo + s_hi))),
        status=res.status if res.status == CONVERGED else f"{res.status} (best of starts)",
        iterations=total_iter,
        starts=summaries,
    )


def mpc_plan(s0, exo, params, comfort, horizon, t0=0.0, **kwargs) -> ControlSchedule:
    """Nonlinear-MPC control schedule over ``horizon`` steps from ``t0``."""
    return solve_mpc(s0, exo, params, comfort, horizon, t0=t0, **kwargs).schedule


def build_lmpc_program(
    s0: MicroclimateState,
    fc: StepForecast,
    params: RoomParams,
    slack_weight=DEFAULT_SLACK_WEIGHT,
    weights=None,
):
    """LP of the linearised planner over ``[W+, W-, s_lo, s_hi, T_1..T_H]``.

    Air mass and inertia temperature are frozen at their initial values,
    ventilation is fixed at its minimum and the model is stepped with one
    explicit Euler step per control step.
    """
    H = fc.horizon
    p = params
    m0 = air_mass(p, s0.T)
    Q = fc.Q_lo
    a = fc.durations / (m0 * p.C_p)
    conductance = p.U + p.U_star + p.C_p * Q + p.C_p * m0 * p.infiltration_rate
    drive = (
        (p.U + p.C_p * m0 * p.infiltration_rate) * fc.T_out
        + p.U_star * s0.T_star
        + p.W_oc * fc.N_oc
        + p.C_p * Q * p.T_in
    )
    n = 5 * H
    iWp, iWm, iSlo, iShi, iT = (np.arange(H) + k * H for k in range(5))
    A_eq = np.zeros((H, n))
    b_eq = a * drive
    rows = np.arange(H)
    # T_{k+1} - (1 - a_k G_k) T_k - a_k (W+_k - W-_k) = a_k drive_k
    A_eq[rows, iT] = 1.0
    A_eq[rows, iWp] = -a
    A_eq[rows, iWm] = a
    carry = 1.0 - a * conductance
    A_eq[rows[1:], iT[:-1]] = -carry[1:]
    b_eq[0] += carry[0] * s0.T

    A_ub = np.zeros((2 * H, n))
    A_ub[rows, iT] = -1.0
    A_ub[rows, iSlo] = -1.0
    A_ub[H + rows, iT] = 1.0
    A_ub[H + rows, iShi] = -1.0
    b_ub = np.concatenate((-fc.T_lo, fc.T_hi))

    energy_hours = fc.hours if weights is None else fc.hours * np.asarray(weights, float)
    c = np.concatenate((energy_hours, energy_hours, slack_weight * fc.hours, slack_weight * fc.hours, np.zeros(H)))
    lb = np.concatenate((np.zeros(4 * H), np.full(H, -np.inf)))
    ub = np.concatenate((np.full(H, p.W_max), np.full(H, -p.W_min), np.full(3 * H, np.inf)))
    return LinearProgram(c, A_ub, b_ub, A_eq, b_eq, lb, ub)


def solve_lmpc(
    s0: MicroclimateState,
    exo: ExogenousSeries,
    params: RoomParams,
    comfort: ComfortSpec,
    horizon: int,
    t0=0.0,
    step=3600.0,
    t_limit=None,
    slack_weight=DEFAULT_SLACK_WEIGHT,
    weights=None,
) -> PlanResult:
    durations = control_grid(t0, horizon, step, t_limit)
    fc = step_forecast(exo, params, comfort, t0, durations)
    lp = build_lmpc_program(s0, fc, params, slack_weight, weights)
    sol = solve_lp(lp)
    if not sol.success:
        raise SolverError(f"linearised MPC program is {sol.status}")
    H = fc.horizon
    W = np.clip(sol.x[:H] - sol.x[H:2 * H], params.W_min, params.W_max)
    slack = float(np.sum(fc.hours * (sol.x[2 * H:3 * H] + sol.x[3 * H:4 * H])))
    hc, vt, vf = step_power_terms(W, fc.Q_lo, fc.T_out, params)
    energy_hours = fc.hours if weights is None else fc.hours * np.asarray(weights, float)
    objective = float(np.sum((hc + vt + vf) * energy_hours)) + slack_weight * slack
    return PlanResult(
        schedule=ControlSchedule(W, fc.Q_lo, durations=durations),
        objective=objective,
        slack=slack,
        status="converged",
        iterations=sol.iterations,
    )


def lmpc_plan(s0, exo, params, comfort, horizon, t0=0.0, **kwargs) -> ControlSchedule:
    """Linearised-MPC control schedule; ventilation is held at its CO2 minimum."""
    return solve_lmpc(s0, exo, params, comfort, horizon, t0=t0, **kwargs).schedule
