"""Sequential linear programming with a box trust region.

Each iteration linearises objective and constraints at the current point and
solves an elastic LP (constraint violations priced at ``sigma``) restricted
to a per-variable box. Steps are judged on the l1 merit function

    phi(x) = f(x) + sigma * (sum(max(0, g(x))) + sum(|h(x)|))

by the ratio of actual to predicted merit decrease.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .lp import LinearProgram, solve_lp

log = logging.getLogger(__name__)

CONVERGED = "converged"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"
STALLED = "stalled"


@dataclass(frozen=True)
class Evaluation:
    """Objective, inequality (``g <= 0``) and equality (``h == 0``) values with first derivatives."""

    f: float
    grad: np.ndarray
    g: np.ndarray | None = None
    jac_g: np.ndarray | None = None
    h: np.ndarray | None = None
    jac_h: np.ndarray | None = None

    def violation(self):
        """l1 and max-norm constraint violation."""
        parts = []
        if self.g is not None and self.g.size:
            parts.append(np.maximum(self.g, 0.0))
        if self.h is not None and self.h.size:
            parts.append(np.abs(self.h))
        if not parts:
            return 0.0, 0.0
        v = np.concatenate(parts)
        return float(np.sum(v)), float(np.max(v))


class FunctionProblem:
    """Adapter turning separate callables into an evaluator with ``evaluate(x)``."""

    def __init__(self, fun, grad, ineq=None, ineq_jac=None, eq=None, eq_jac=None):
        self.fun, self.grad = fun, grad
        self.ineq, self.ineq_jac = ineq, ineq_jac
        self.eq, self.eq_jac = eq, eq_jac

    def evaluate(self, x):
        g = jg = h = jh = None
        if self.ineq is not None:
            g = np.atleast_1d(np.asarray(self.ineq(x), dtype=float))
            jg = np.atleast_2d(np.asarray(self.ineq_jac(x), dtype=float))
        if self.eq is not None:
            h = np.atleast_1d(np.asarray(self.eq(x), dtype=float))
            jh = np.atleast_2d(np.asarray(self.eq_jac(x), dtype=float))
        return Evaluation(float(self.fun(x)), np.asarray(self.grad(x), dtype=float), g, jg, h, jh)


@dataclass
class SlpOptions:
    max_iter: int = 200
    tol: float = 1e-6
    feas_tol: float = 1e-6
    tr_init: float = 0.1
    tr_shrink: float = 0.5
    tr_grow: float = 1.5
    accept_ratio: float = 0.1
    grow_ratio: float = 0.75
    tr_floor: float = 1e-8
    sigma0: float | None = None
    sigma_max: float = 1e14
    tr_scale: np.ndarray | None = None


@dataclass
class SlpResult:
    x: np.ndarray
    f: float
    status: str
    iterations: int
    evaluations: int
    violation: float
    sigma: float
    merit_history: list = field(default_factory=list)

    @property
    def success(self):
        return self.status == CONVERGED


def _linear_subproblem(ev: Evaluation, x, lb, ub, radius, sigma):
    n = x.size
    m_g = 0 if ev.g is None else ev.g.size
    m_h = 0 if ev.h is None else ev.h.size
    nv = n + m_g + 2 * m_h
    c = np.concatenate((ev.grad, np.full(m_g + 2 * m_h, sigma)))
    lo = np.concatenate((np.maximum(lb - x, -radius), np.zeros(m_g + 2 * m_h)))
    hi = np.concatenate((np.minimum(ub - x, radius), np.full(m_g + 2 * m_h, np.inf)))
    # guard against round-off putting x a hair outside its bounds
    lo = np.minimum(lo, 0.0)
    hi = np.maximum(hi, 0.0)
    A_ub = b_ub = A_eq = b_eq = None
    if m_g:
        A_ub = np.zeros((m_g, nv))
        A_ub[:, :n] = ev.jac_g
        A_ub[:, n:n + m_g] = -np.eye(m_g)
        b_ub = -ev.g
    if m_h:
        A_eq = np.zeros((m_h, nv))
        A_eq[:, :n] = ev.jac_h
        A_eq[:, n + m_g:n + m_g + m_h] = -np.eye(m_h)
        A_eq[:, n + m_g + m_h:] = np.eye(m_h)
        b_eq = -ev.h
    return LinearProgram(c, A_ub, b_ub, A_eq, b_eq, lo, hi)


def solve_slp(problem, x0, lb, ub, options: SlpOptions | None = None) -> SlpResult:
    """Minimise ``problem`` from ``x0`` within ``[lb, ub]``.

    ``problem.evaluate(x)`` must return an :class:`Evaluation`. The result
    holds the best point found; ``status`` is ``"converged"`` when the
    linearised model predicts no further merit decrease and the point is
    feasible.
    """
    opts = options or SlpOptions()
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    x = np.asarray(x0, dtype=float).copy()
    span = np.maximum(np.abs(lb), np.abs(ub))
    slack = 1e-9 * np.where(np.isfinite(span), np.maximum(span, 1.0), 1.0)
    if np.any(x < lb - slack) or np.any(x > ub + slack):
        raise DomainError("starting point lies outside the variable bounds")
    x = np.clip(x, lb, ub)

    if opts.tr_scale is not None:
        scale = np.asarray(opts.tr_scale, dtype=float)
    else:
        rng = ub - lb
        scale = np.where(np.isfinite(rng), rng, 10.0 * np.maximum(1.0, np.abs(x)))
    scale = np.where(scale > 0, scale, 1.0)
    radius = opts.tr_init * scale
    floor = opts.tr_floor * np.where(np.isfinite(scale), scale, 1.0)

    ev = problem.evaluate(x)
    n_eval = 1
    sigma = opts.sigma0 if opts.sigma0 is not None else 1.0 + float(np.max(np.abs(ev.grad), initial=0.0))
    history = []
    status = MAX_ITER
    it = 0
    for it in range(1, opts.max_iter + 1):
        viol1, _ = ev.violation()
        merit = ev.f + sigma * viol1
        lp = _linear_subproblem(ev, x, lb, ub, radius, sigma)
        sol = solve_lp(lp)
        if not sol.success:
            log.warning("SLP subproblem %s at iteration %d", sol.status, it)
            status = STALLED
            break
        n = x.size
        d = sol.x[:n]
        model = float(ev.grad @ d) + sigma * float(np.sum(sol.x[n:]))
        predicted = sigma * viol1 - model
        if predicted <= opts.tol * (1.0 + abs(ev.f)):
            _, vmax = ev.violation()
            if vmax <= opts.feas_tol:
                status = CONVERGED
                break
            if sigma >= opts.sigma_max:
                status = INFEASIBLE
                break
            sigma = min(opts.sigma_max, 10.0 * sigma)
            continue

        x_new = np.clip(x + d, lb, ub)
        ev_new = problem.evaluate(x_new)
        n_eval += 1
        merit_new = ev_new.f + sigma * ev_new.violation()[0]
        ratio = (merit - merit_new) / predicted
        if ratio >= opts.accept_ratio:
            history.append((sigma, merit, merit_new))
            x, ev = x_new, ev_new
            if ratio > opts.grow_ratio:
                radius = radius * opts.tr_grow
        else:
            radius = np.maximum(radius * opts.tr_shrink, floor)
            if np.all(radius <= floor * (1 + 1e-12)):
                _, vmax = ev.violation()
                status = STALLED if vmax <= opts.feas_tol else INFEASIBLE
                break

        multipliers = np.abs(sol.ineq_marginals) if sol.ineq_marginals is not None else np.zeros(0)
        if sol.eq_marginals is not None:
            multipliers = np.concatenate((multipliers, np.abs(sol.eq_marginals)))
        if multipliers.size:
            sigma = min(opts.sigma_max, max(sigma, 1.5 * float(np.max(multipliers))))

    if status == MAX_ITER:
        log.warning("SLP stopped after %d iterations without convergence", opts.max_iter)
    return SlpResult(
        x=x,
        f=ev.f,
        status=status,
        iterations=it,
        evaluations=n_eval,
        violation=ev.violation()[1],
        sigma=sigma,
        merit_history=history,
    )


def finite_diff_check(problem, x, h) -> float:
    """Worst relative gap between analytic and central-difference derivatives.

    Each function (objective, every constraint) is compared row-wise:
    ``max|fd - analytic| / max(|analytic|_inf, |fd|_inf, 1e-12)``.
    """
    x = np.asarray(x, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), x.shape)
    ev = problem.evaluate(x)

    def stack(e):
        parts = [np.atleast_1d(e.f)]
        if e.g is not None:
            parts.append(e.g)
        if e.h is not None:
            parts.append(e.h)
        return np.concatenate(parts)

    rows = [ev.grad[None, :]]
    if ev.jac_g is not None:
        rows.append(ev.jac_g)
    if ev.jac_h is not None:
        rows.append(ev.jac_h)
    analytic = np.vstack(rows)
    numeric = np.empty_like(analytic)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h[i]
        numeric[:, i] = (stack(problem.evaluate(x + step)) - stack(problem.evaluate(x - step))) / (2 * h[i])
    denom = np.maximum(np.maximum(np.max(np.abs(analytic), axis=1), np.max(np.abs(numeric), axis=1)), 1e-12)
    return float(np.max(np.max(np.abs(numeric - analytic), axis=1) / denom))

