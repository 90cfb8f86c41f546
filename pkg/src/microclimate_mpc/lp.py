"""Dense two-phase primal simplex for small linear programs.

Solves ::

    min  c @ x
    s.t. A_ub @ x <= b_ub
         A_eq @ x == b_eq
         lb <= x <= ub

Variables are shifted (or split, when free) so that every column has a lower
bound of zero; finite upper bounds are handled implicitly by the
bounded-variable ratio test rather than as extra rows. Pricing is Dantzig's
rule with lowest-index tie breaking, switching to Bland's rule after a run of
degenerate pivots so the method always terminates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SolverError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

FEAS_TOL = 1e-8
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
DEGENERATE_BUDGET = 50


def _matrix(A, n, name):
    if A is None:
        return np.zeros((0, n))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return np.zeros((0, n))
    if A.shape[1] != n:
        raise DomainError(f"{name} has {A.shape[1]} columns, expected {n}")
    return A


def _vector(b, m, name):
    if b is None:
        b = np.zeros(0)
    b = np.asarray(b, dtype=float).ravel()
    if b.shape[0] != m:
        raise DomainError(f"{name} has length {b.shape[0]}, expected {m}")
    return b


@dataclass(frozen=True, eq=False)
class LinearProgram:
    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.shape[0]
        A_ub = _matrix(self.A_ub, n, "A_ub")
        A_eq = _matrix(self.A_eq, n, "A_eq")
        b_ub = _vector(self.b_ub, A_ub.shape[0], "b_ub")
        b_eq = _vector(self.b_eq, A_eq.shape[0], "b_eq")
        lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).ravel()
        if lb.shape[0] != n or ub.shape[0] != n:
            raise DomainError("bounds must have one entry per variable")
        if np.any(lb > ub) or np.any(lb == np.inf) or np.any(ub == -np.inf):
            raise DomainError("inconsistent variable bounds")
        for arr, name in ((c, "c"), (A_ub, "A_ub"), (A_eq, "A_eq"), (b_ub, "b_ub"), (b_eq, "b_eq")):
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"{name} contains non-finite values")
        for name, val in (("c", c), ("A_ub", A_ub), ("b_ub", b_ub), ("A_eq", A_eq),
                          ("b_eq", b_eq), ("lb", lb), ("ub", ub)):
            object.__setattr__(self, name, val)

    @property
    def n(self):
        return self.c.shape[0]

    def residuals(self, x):
        """Largest violation of rows and bounds at ``x``."""
        viol = 0.0
        if self.A_ub.shape[0]:
            viol = max(viol, float(np.max(self.A_ub @ x - self.b_ub, initial=0.0)))
        if self.A_eq.shape[0]:
            viol = max(viol, float(np.max(np.abs(self.A_eq @ x - self.b_eq))))
        viol = max(viol, float(np.max(self.lb - x, initial=0.0)), float(np.max(x - self.ub, initial=0.0)))
        return viol


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = np.nan
    ineq_marginals: np.ndarray | None = None
    eq_marginals: np.ndarray | None = None
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def success(self):
        return self.status == OPTIMAL


class _Tableau:
    """Bounded-variable simplex tableau; all columns have lower bound zero."""

    def __init__(self, A, b, upper, basis):
        self.T = A.copy()
        self.xB = b.copy()
        self.upper = upper
        self.basis = np.array(basis, dtype=np.int64)
        self.at_upper = np.zeros(A.shape[1], dtype=bool)
        self.iterations = 0

    def reduced_costs(self, cost):
        return cost - cost[self.basis] @ self.T

    def run(self, cost, allowed, opt_tol, max_iter):
        """Minimise ``cost`` over the current basis; returns OPTIMAL or UNBOUNDED."""
        d = self.reduced_costs(cost)
        m, ncol = self.T.shape
        is_basic = np.zeros(ncol, dtype=bool)
        is_basic[self.basis] = True
        degenerate_run = 0
        for _ in range(max_iter):
            cand = allowed & ~is_basic & (self.upper > 0)
            improving = cand & (
                ((d < -opt_tol) & ~self.at_upper) | ((d > opt_tol) & self.at_upper)
            )
            idx = np.flatnonzero(improving)
            if idx.size == 0:
                return OPTIMAL
            bland = degenerate_run >= DEGENERATE_BUDGET
            if bland:
                j = int(idx[0])
            else:
                j = int(idx[np.argmax(np.abs(d[idx]))])
            direction = -1.0 if self.at_upper[j] else 1.0
            col = self.T[:, j]
            step = self.upper[j]
            leave = -1
            leave_to_upper = False
            alpha = direction * col
            # basic variables decreasing towards zero
            dec = alpha > PIVOT_TOL
            # basic variables increasing towards a finite upper bound
            inc = (alpha < -PIVOT_TOL) & np.isfinite(self.upper[self.basis])
            ratios = np.full(m, np.inf)
            ratios[dec] = np.maximum(self.xB[dec], 0.0) / alpha[dec]
            ub_basic = self.upper[self.basis]
            ratios[inc] = np.maximum(ub_basic[inc] - self.xB[inc], 0.0) / -alpha[inc]
            if m:
                best = float(np.min(ratios))
                if best < step:
                    ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, best))
                    if bland:
                        r = int(ties[np.argmin(self.basis[ties])])
                    else:
                        r = int(ties[np.argmax(np.abs(alpha[ties]))])
                    leave = r
                    leave_to_upper = bool(inc[r])
                    step = best
            if not np.isfinite(step):
                return UNBOUNDED
            self.iterations += 1
            degenerate_run = degenerate_run + 1 if step <= 1e-12 else 0
            self.xB -= step * alpha
            if leave < 0:
                # bound flip, basis unchanged
                self.at_upper[j] = not self.at_upper[j]
                continue
            entering_value = (self.upper[j] if self.at_upper[j] else 0.0) + direction * step
            out = self.basis[leave]
            is_basic[out] = False
            is_basic[j] = True
            self.at_upper[out] = leave_to_upper
            self.at_upper[j] = False
            self.basis[leave] = j
            self.xB[leave] = entering_value
            self._pivot(leave, j)
            d -= d[j] * self.T[leave]
        raise SolverError(f"simplex exceeded {max_iter} iterations")

    def _pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        factors = T[:, j].copy()
        factors[r] = 0.0
        T -= np.outer(factors, T[r])
        T[:, j] = 0.0
        T[r, j] = 1.0

    def values(self, ncol):
        v = np.where(self.at_upper[:ncol], self.upper[:ncol], 0.0)
        mask = self.basis < ncol
        v[self.basis[mask]] = self.xB[mask]
        return v


def _standardize(p: LinearProgram):
    """Map ``x = offset + M @ y`` with ``y >= 0``; returns (M, offset, y_upper)."""
    cols = []
    offset = np.zeros(p.n)
    upper = []
    for i in range(p.n):
        lo, hi = p.lb[i], p.ub[i]
        if np.isfinite(lo):
            offset[i] = lo
            cols.append((i, 1.0))
            upper.append(hi - lo)
        elif np.isfinite(hi):
            offset[i] = hi
            cols.append((i, -1.0))
            upper.append(np.inf)
        else:
            cols.append((i, 1.0))
            upper.append(np.inf)
            cols.append((i, -1.0))
            upper.append(np.inf)
    M = np.zeros((p.n, len(cols)))
    for k, (i, s) in enumerate(cols):
        M[i, k] = s
    return M, offset, np.array(upper)


def solve_lp(p: LinearProgram, max_iter=None) -> LpSolution:
    """Solve ``p``; the result is deterministic for identical input."""
    M, offset, y_upper = _standardize(p)
    m_ub, m_eq = p.A_ub.shape[0], p.A_eq.shape[0]
    m = m_ub + m_eq
    ny = M.shape[1]
    A = np.zeros((m, ny + m_ub))
    A[:m_ub, :ny] = p.A_ub @ M
    A[m_ub:, :ny] = p.A_eq @ M
    A[:m_ub, ny:] = np.eye(m_ub)
    b = np.concatenate((p.b_ub - p.A_ub @ offset, p.b_eq - p.A_eq @ offset))
    c_std = np.concatenate((M.T @ p.c, np.zeros(m_ub)))
    upper = np.concatenate((y_upper, np.full(m_ub, np.inf)))
    scale = 1.0 + (float(np.max(np.abs(b))) if m else 0.0)
    feas_tol = FEAS_TOL * scale
    opt_tol = OPT_TOL * max(1.0, float(np.max(np.abs(c_std), initial=0.0)))
    if max_iter is None:
        max_iter = 50 * (m + ny + m_ub) + 1000

    # sign-normalise rows so that b >= 0; rows whose slack keeps +1 start with it basic
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign
    basis = []
    art_rows = []
    for i in range(m):
        if i < m_ub and sign[i] > 0:
            basis.append(ny + i)
        else:
            art_rows.append(i)
            basis.append(-1)
    n_art = len(art_rows)
    ncol = ny + m_ub
    A_full = np.zeros((m, ncol + n_art))
    A_full[:, :ncol] = A
    for k, i in enumerate(art_rows):
        A_full[i, ncol + k] = 1.0
        basis[i] = ncol + k
    upper_full = np.concatenate((upper, np.full(n_art, np.inf)))
    tab = _Tableau(A_full, b, upper_full, basis)

    if n_art:
        phase1 = np.zeros(ncol + n_art)
        phase1[ncol:] = 1.0
        allowed = np.ones(ncol + n_art, dtype=bool)
        tab.run(phase1, allowed, OPT_TOL, max_iter)
        infeasibility = float(np.sum(tab.values(ncol + n_art)[ncol:]))
        if infeasibility > feas_tol:
            return LpSolution(INFEASIBLE, iterations=tab.iterations)
        _drive_out_artificials(tab, ncol)

    allowed = np.zeros(ncol + n_art, dtype=bool)
    allowed[:ncol] = True
    cost = np.concatenate((c_std, np.zeros(n_art)))
    status = tab.run(cost, allowed, opt_tol, max_iter)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, iterations=tab.iterations)

    y = _refine(tab, A_full, b, ncol)
    x = offset + M @ y[:ny]
    # snap tiny bound excursions from round-off
    x = np.clip(x, p.lb, p.ub)
    ineq_dual, eq_dual = _duals(tab, A_full, cost, sign, m_ub, ncol)
    return LpSolution(
        OPTIMAL,
        x=x,
        objective=float(p.c @ x),
        ineq_marginals=ineq_dual,
        eq_marginals=eq_dual,
        iterations=tab.iterations,
    )


def _drive_out_artificials(tab, ncol):
    """Pivot zero-valued artificials out of the basis; drop redundant rows."""
    keep = np.ones(tab.T.shape[0], dtype=bool)
    for r in range(tab.T.shape[0]):
        if tab.basis[r] < ncol:
            continue
        row = tab.T[r, :ncol].copy()
        row[tab.basis[tab.basis < ncol]] = 0.0
        candidates = np.flatnonzero(np.abs(row) > 1e-7)
        if candidates.size == 0:
            keep[r] = False
            continue
        j = int(candidates[np.argmax(np.abs(row[candidates]))])
        value = tab.upper[j] if tab.at_upper[j] else 0.0
        tab.at_upper[j] = False
        tab.basis[r] = j
        tab.xB[r] = value
        tab._pivot(r, j)
    if not np.all(keep):
        tab.T = tab.T[keep]
        tab.xB = tab.xB[keep]
        tab.basis = tab.basis[keep]
    tab.kept_rows = keep


def _refine(tab, A_full, b, ncol):
    """Recompute basic values from the original data for accuracy."""
    rows = getattr(tab, "kept_rows", np.ones(A_full.shape[0], dtype=bool))
    values = tab.values(ncol)
    nonbasic = np.ones(ncol, dtype=bool)
    nonbasic[tab.basis[tab.basis < ncol]] = False
    rhs = b[rows] - A_full[rows][:, :ncol][:, nonbasic] @ values[nonbasic]
    B = A_full[rows][:, tab.basis]
    try:
        xB = np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError:
        return values
    values[tab.basis[tab.basis < ncol]] = xB[tab.basis < ncol]
    return values


def _duals(tab, A_full, cost, sign, m_ub, ncol):
    rows = getattr(tab, "kept_rows", np.ones(A_full.shape[0], dtype=bool))
    m = A_full.shape[0]
    y = np.zeros(m)
    if np.any(rows):
        B = A_full[rows][:, tab.basis]
        try:
            y[rows] = np.linalg.solve(B.T, cost[tab.basis])
        except np.linalg.LinAlgError:
            y[rows] = np.linalg.lstsq(B.T, cost[tab.basis], rcond=None)[0]
    y *= sign
    return y[:m_ub], y[m_ub:]
