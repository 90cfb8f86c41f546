import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import lp_oracle, random_lp
from microclimate_mpc.errors import DomainError
from microclimate_mpc.lp import FEAS_TOL, INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, solve_lp


def test_single_bound():
    sol = solve_lp(LinearProgram([1.0], lb=[3.0]))
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(3.0)
    assert sol.objective == pytest.approx(3.0)


def test_face_returns_vertex():
    sol = solve_lp(LinearProgram([-1.0, -1.0], A_ub=[[1.0, 1.0]], b_ub=[1.0]))
    assert sol.objective == pytest.approx(-1.0)
    assert sorted(np.round(sol.x, 12).tolist()) == [0.0, 1.0]


def test_infeasible():
    assert solve_lp(LinearProgram([0.0], A_ub=[[1.0]], b_ub=[-1.0])).status == INFEASIBLE


def test_unbounded():
    assert solve_lp(LinearProgram([-1.0, 0.0], A_ub=[[1.0, -1.0]], b_ub=[1.0])).status == UNBOUNDED


def test_free_variables_and_equalities():
    # min |shifted| style problem: x free, y in [-2, 2]
    sol = solve_lp(LinearProgram([1.0, 1.0], A_eq=[[1.0, -1.0]], b_eq=[3.0], lb=[-np.inf, -2.0], ub=[np.inf, 2.0]))
    assert sol.status == OPTIMAL
    assert sol.x == pytest.approx([1.0, -2.0])


def test_redundant_equalities():
    sol = solve_lp(LinearProgram([1.0, 2.0], A_eq=[[1.0, 1.0], [2.0, 2.0]], b_eq=[1.0, 2.0]))
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(1.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(c=[1.0, 2.0], A_ub=[[1.0]], b_ub=[1.0]),
        dict(c=[1.0], A_ub=[[1.0]], b_ub=[1.0, 2.0]),
        dict(c=[1.0], lb=[1.0], ub=[0.0]),
        dict(c=[np.nan]),
    ],
)
def test_malformed(kwargs):
    with pytest.raises(DomainError):
        LinearProgram(**kwargs)


def test_degenerate_cycling_example():
    # Beale's classic cycling instance under naive Dantzig pricing
    c = [-0.75, 150.0, -0.02, 6.0]
    A = [[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]]
    sol = solve_lp(LinearProgram(c, A_ub=A, b_ub=[0.0, 0.0, 1.0]))
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-0.05)


def test_duals_are_marginals():
    p = LinearProgram([-1.0, -2.0], A_ub=[[1.0, 1.0], [0.0, 1.0]], b_ub=[4.0, 3.0])
    sol = solve_lp(p)
    eps = 1e-3
    for i in range(2):
        b = p.b_ub.copy()
        b[i] += eps
        bumped = solve_lp(LinearProgram(p.c, A_ub=p.A_ub, b_ub=b))
        assert sol.ineq_marginals[i] == pytest.approx((bumped.objective - sol.objective) / eps, abs=1e-6)


def test_deterministic():
    rng = np.random.default_rng(5)
    kw = random_lp(rng)
    a, b = solve_lp(LinearProgram(**kw)), solve_lp(LinearProgram(**kw))
    assert a.status == b.status
    if a.success:
        assert np.array_equal(a.x, b.x)


@pytest.mark.parametrize("seed", range(200))
def test_matches_vertex_oracle(seed):
    kw = random_lp(np.random.default_rng(10_000 + seed))
    status, value = lp_oracle(**kw)
    p = LinearProgram(**kw)
    sol = solve_lp(p)
    assert sol.status == status
    if status == OPTIMAL:
        assert sol.objective == pytest.approx(value, abs=1e-8, rel=1e-8)
        assert p.residuals(sol.x) <= FEAS_TOL * (1 + max(np.abs(p.b_ub).max(initial=0), np.abs(p.b_eq).max(initial=0)))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), lam=st.floats(0.1, 100))
def test_cost_scaling_keeps_argmin(seed, lam):
    kw = random_lp(np.random.default_rng(seed))
    a = solve_lp(LinearProgram(**kw))
    kw["c"] = kw["c"] * lam
    b = solve_lp(LinearProgram(**kw))
    assert a.status == b.status
    if a.success:
        np.testing.assert_allclose(a.x, b.x, atol=1e-9)


@pytest.mark.parametrize("E, e, expect", [([[0.0]], [0.0], "optimal"), ([[0.0]], [1.0], "infeasible"), ([[1.0], [2.0]], [2.0, 4.0], "optimal")])
def test_oracle_handles_dependent_equalities(E, e, expect):
    kw = dict(c=[-4.0], A_ub=[[4.0]], b_ub=[9.0], A_eq=E, b_eq=e, lb=[0.0], ub=[np.inf])
    assert lp_oracle(**kw)[0] == expect
    assert solve_lp(LinearProgram(**{k: np.asarray(v, float) for k, v in kw.items()})).status == expect
