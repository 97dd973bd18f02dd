"""Barrier solver behavior on analytically solvable programs."""
import math

import numpy as np
import pytest

from eastopt.convex_solver import (AffineEq, AffineIneq, ConvexProblem, LogAffine,
                                   LogTerm, QuadBall, Reciprocal, SecondOrderCone,
                                   SolverResult, Status, check_kkt, row_margins, solve)


def _problem(n, obj, rows, eqs=(), lb=None, ub=None, scale=None, blocks=None):
    return ConvexProblem(n=n, objective=np.asarray(obj, dtype=float), rows=tuple(rows),
                         eqs=tuple(eqs), lb=lb, ub=ub, scale=scale, blocks=blocks or {})


class TestToyProblems:
    def test_single_affine_row(self):
        # maximize t subject to t <= 5
        p = _problem(1, [1.0], [AffineIneq((0,), (1.0,), 5.0, "cap")])
        res = solve(p, np.array([0.0]))
        assert res.status is Status.OPTIMAL
        assert res.objective == pytest.approx(5.0, abs=1e-6)
        assert res.kkt_residual <= 1e-6

    def test_log_row(self):
        # maximize t subject to ln(x) >= t and x <= e^2  ->  t* = 2
        rows = [LogAffine((LogTerm(1.0, (1,), (1.0,), 0.0),), (0,), (1.0,), 0.0, "ln"),
                AffineIneq((1,), (1.0,), math.e ** 2, "xcap")]
        p = _problem(2, [1.0, 0.0], rows, lb=np.array([-np.inf, 1e-12]))
        res = solve(p, np.array([-1.0, 1.0]))
        assert res.status is Status.OPTIMAL
        assert res.objective == pytest.approx(2.0, abs=1e-5)

    def test_cone_row(self):
        # maximize t subject to |q - (3,4)| <= 5 - t  ->  t* = 5 at q = (3,4)
        rows = [SecondOrderCone((0, 1), ((1.0, 0.0), (0.0, 1.0)), (-3.0, -4.0),
                                (2,), (-1.0,), 5.0, "ball")]
        p = _problem(3, [0.0, 0.0, 1.0], rows)
        res = solve(p, np.array([1.0, 1.0, -10.0]))
        assert res.status is Status.OPTIMAL
        assert res.objective == pytest.approx(5.0, abs=1e-5)
        assert res.x[0] == pytest.approx(3.0, abs=1e-3)
        assert res.x[1] == pytest.approx(4.0, abs=1e-3)

    def test_quad_ball_row(self):
        # maximize x + y subject to x^2 + y^2 <= 2  ->  (1, 1)
        rows = [QuadBall((0, 1), ((1.0, 0.0), (0.0, 1.0)), (0.0, 0.0), (), (), 2.0, "disc")]
        p = _problem(2, [1.0, 1.0], rows)
        res = solve(p, np.array([0.0, 0.0]))
        assert res.status is Status.OPTIMAL
        assert res.objective == pytest.approx(2.0, abs=1e-6)

    def test_reciprocal_row(self):
        # minimize u + v subject to u >= 1/v  ->  u = v = 1, objective max -(u+v) = -2
        rows = [Reciprocal(0, 1, "recip")]
        p = _problem(2, [-1.0, -1.0], rows, lb=np.array([1e-9, 1e-9]))
        res = solve(p, np.array([3.0, 2.0]))
        assert res.status is Status.OPTIMAL
        assert res.objective == pytest.approx(-2.0, abs=1e-5)
        assert res.x[0] * res.x[1] == pytest.approx(1.0, abs=1e-4)

    def test_equality_constraint(self):
        # maximize x + y subject to x = 1, x^2 + y^2 <= 2
        rows = [QuadBall((0, 1), ((1.0, 0.0), (0.0, 1.0)), (0.0, 0.0), (), (), 2.0, "disc")]
        eqs = [AffineEq((0,), (1.0,), 1.0, "pin")]
        p = _problem(2, [1.0, 1.0], rows, eqs=eqs)
        res = solve(p, np.array([1.0, 0.0]))
        assert res.status is Status.OPTIMAL
        assert res.x[0] == pytest.approx(1.0, abs=1e-9)
        assert res.objective == pytest.approx(2.0, abs=1e-5)

    def test_variable_bounds(self):
        # maximize x - y with 0 <= x <= 3 and y >= -2
        p = _problem(2, [1.0, -1.0], [],
                     lb=np.array([0.0, -2.0]), ub=np.array([3.0, np.inf]))
        res = solve(p, np.array([1.0, 0.0]))
        assert res.status is Status.OPTIMAL
        assert res.objective == pytest.approx(5.0, abs=1e-5)


class TestContracts:
    def _toy(self):
        return _problem(1, [1.0], [AffineIneq((0,), (1.0,), 5.0, "cap")])

    def test_deterministic(self):
        p = self._toy()
        a = solve(p, np.array([0.0]))
        b = solve(p, np.array([0.0]))
        assert a.iterations == b.iterations
        assert np.array_equal(a.x, b.x)
        assert a.objective == b.objective

    def test_never_worse_than_start(self):
        # start already essentially optimal
        p = self._toy()
        res = solve(p, np.array([5.0 - 1e-9]))
        assert res.objective >= 5.0 - 1e-9 - 1e-12

    def test_infeasible_start_rejected(self):
        p = self._toy()
        with pytest.raises(ValueError, match="strictly feasible"):
            solve(p, np.array([6.0]))

    def test_equality_violating_start_rejected(self):
        p = _problem(2, [1.0, 0.0], [AffineIneq((0,), (1.0,), 5.0, "cap")],
                     eqs=[AffineEq((1,), (1.0,), 2.0, "pin")])
        with pytest.raises(ValueError, match="equality"):
            solve(p, np.array([0.0, 0.0]))

    def test_max_iterations_returns_feasible_iterate(self):
        rows = [QuadBall((0, 1), ((1.0, 0.0), (0.0, 1.0)), (0.0, 0.0), (), (), 2.0, "disc")]
        p = _problem(2, [1.0, 1.0], rows)
        res = solve(p, np.array([0.0, 0.0]), max_newton_steps=3)
        assert res.status is Status.MAX_ITERATIONS
        assert res.x[0] ** 2 + res.x[1] ** 2 < 2.0

    def test_row_margins_orientation(self):
        p = self._toy()
        assert row_margins(p, np.array([3.0]))[0] == pytest.approx(2.0)
        assert row_margins(p, np.array([6.0]))[0] == pytest.approx(-1.0)


class TestKktCheck:
    def test_optimal_result_certified(self):
        rows = [QuadBall((0, 1), ((1.0, 0.0), (0.0, 1.0)), (0.0, 0.0), (), (), 2.0, "disc")]
        p = _problem(2, [1.0, 1.0], rows)
        res = solve(p, np.array([0.0, 0.0]))
        assert check_kkt(p, res.x, res.duals) == res.kkt_residual <= 1e-6

    def test_perturbation_increases_residual(self):
        rows = [QuadBall((0, 1), ((1.0, 0.0), (0.0, 1.0)), (0.0, 0.0), (), (), 2.0, "disc")]
        p = _problem(2, [1.0, 1.0], rows)
        res = solve(p, np.array([0.0, 0.0]))
        perturbed = res.x + np.array([1e-2, 1e-2])  # push along the binding direction
        assert check_kkt(p, perturbed, res.duals) > res.kkt_residual

    def test_domain_violation_is_infinite(self):
        rows = [LogAffine((LogTerm(1.0, (0,), (1.0,), 0.0),), (), (), -10.0, "ln")]
        p = _problem(1, [-1.0], rows, lb=np.array([-np.inf]))
        assert check_kkt(p, np.array([-1.0]), {"rows": np.zeros(1)}) == np.inf

    def test_zero_duals_interior_point(self):
        p = _problem(1, [1.0], [AffineIneq((0,), (1.0,), 5.0, "cap")])
        duals = {"rows": np.zeros(1), "eq": np.zeros(0),
                 "lb": np.zeros(1), "ub": np.zeros(1)}
        # stationarity alone: gradient of the objective, scaled
        assert check_kkt(p, np.array([0.0]), duals) == pytest.approx(0.5)
