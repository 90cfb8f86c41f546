import numpy as np
import pytest

from microclimate_mpc.errors import DomainError
from microclimate_mpc.lp import LinearProgram, solve_lp
from microclimate_mpc.slp import CONVERGED, FunctionProblem, SlpOptions, finite_diff_check, solve_slp


def quadratic():
    return FunctionProblem(lambda x: (x[0] - 2.0) ** 2, lambda x: np.array([2.0 * (x[0] - 2.0)]))


def test_boundary_optimum():
    res = solve_slp(quadratic(), [0.5], [0.0], [1.0])
    assert res.status == CONVERGED
    assert res.x[0] == pytest.approx(1.0)


def test_interior_quadratic_optimum():
    res = solve_slp(quadratic(), [0.0], [-5.0], [5.0])
    assert res.x[0] == pytest.approx(2.0, abs=1e-3)


def test_linear_problem_matches_lp():
    c = np.array([-1.0, -2.0])
    A = np.array([[1.0, 1.0], [1.0, -1.0]])
    b = np.array([3.0, 1.0])
    prob = FunctionProblem(lambda x: c @ x, lambda x: c, lambda x: A @ x - b, lambda x: A)
    res = solve_slp(prob, [0.0, 0.0], [0.0, 0.0], [10.0, 10.0], SlpOptions(tr_init=10.0))
    lp = solve_lp(LinearProgram(c, A, b, lb=[0, 0], ub=[10, 10]))
    assert res.status == CONVERGED
    assert res.f == pytest.approx(lp.objective, abs=1e-9)


def bilinear():
    # min q (t - 5) + t over t in [0, 10], q in [0, 1]
    return FunctionProblem(lambda x: x[1] * (x[0] - 5.0) + x[0], lambda x: np.array([x[1] + 1.0, x[0] - 5.0]))


@pytest.mark.parametrize("x0", [[5.0, 0.5], [10.0, 1.0], [0.0, 0.0], [7.0, 0.2]])
def test_bilinear_against_grid(x0):
    t, q = np.meshgrid(np.linspace(0, 10, 101), np.linspace(0, 1, 101))
    best = np.min(q * (t - 5) + t)
    res = solve_slp(bilinear(), x0, [0.0, 0.0], [10.0, 1.0])
    assert res.f == pytest.approx(best, abs=1e-3)


def test_nonlinear_constraint():
    # min x + y on the unit disk
    prob = FunctionProblem(
        lambda x: x[0] + x[1], lambda x: np.ones(2),
        lambda x: np.array([x @ x - 1.0]), lambda x: 2.0 * x[None, :],
    )
    res = solve_slp(prob, [0.0, 0.0], [-2.0, -2.0], [2.0, 2.0])
    assert res.status == CONVERGED
    assert res.f == pytest.approx(-np.sqrt(2.0), abs=1e-4)
    assert res.violation <= 1e-6


def test_merit_non_increasing():
    prob = FunctionProblem(
        lambda x: (x[0] - 1) ** 2 + (x[1] + 0.5) ** 4, lambda x: np.array([2 * (x[0] - 1), 4 * (x[1] + 0.5) ** 3]),
        lambda x: np.array([x[0] ** 2 + x[1] - 0.5]), lambda x: np.array([[2 * x[0], 1.0]]),
    )
    res = solve_slp(prob, [-1.5, 1.5], [-3.0, -3.0], [3.0, 3.0])
    assert res.merit_history
    for _, before, after in res.merit_history:
        assert after <= before + 1e-12


def test_restart_is_fixed_point():
    res = solve_slp(bilinear(), [7.0, 0.2], [0.0, 0.0], [10.0, 1.0])
    again = solve_slp(bilinear(), res.x, [0.0, 0.0], [10.0, 1.0])
    assert abs(again.f - res.f) <= 1e-6 * (1 + abs(res.f))


def test_infeasible_problem_reports_status():
    prob = FunctionProblem(
        lambda x: x[0], lambda x: np.ones(1), lambda x: np.array([1.0 - x[0] ** 2]), lambda x: np.array([[-2 * x[0]]])
    )
    res = solve_slp(prob, [0.1], [-0.5], [0.5], SlpOptions(sigma_max=1e6))
    assert res.status != CONVERGED
    assert res.violation > 0


def test_iteration_cap_warns(caplog):
    res = solve_slp(quadratic(), [-5.0], [-5.0], [5.0], SlpOptions(max_iter=1, tr_init=0.01))
    assert res.status == "max_iter"
    assert "without convergence" in caplog.text


def test_start_outside_bounds():
    with pytest.raises(DomainError):
        solve_slp(quadratic(), [2.0], [0.0], [1.0])


def test_fd_check_quadratic():
    A = np.array([[3.0, 1.0], [1.0, 2.0]])
    prob = FunctionProblem(lambda x: x @ A @ x, lambda x: 2 * A @ x)
    assert finite_diff_check(prob, np.array([0.3, -0.7]), 1e-4) <= 1e-8


def test_fd_check_catches_wrong_gradient():
    prob = FunctionProblem(lambda x: np.sin(x[0]) * x[1], lambda x: np.array([np.sin(x[0]), x[1]]))
    assert finite_diff_check(prob, np.array([0.4, 1.3]), 1e-5) > 1e-2
