"""
Tests for the gradient-descent oracle and the convergence bounds.
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from looped_core import (
    BoundParams,
    ConstantSchedule,
    DimensionError,
    ExplicitSchedule,
    LoopConfig,
    RandomSource,
    RegressionProblem,
    ScheduleMismatchError,
    SingularMatrixError,
    bound_params_for,
    contraction_param_bound,
    gradient,
    least_squares,
    loss,
    make_task,
    run_gd,
    theoretical_param_bound,
    theoretical_prediction_bound,
)
from looped_core.gd_oracle import log_theoretical_param_bound, log_theoretical_prediction_bound


@pytest.fixture
def hand_problem():
    return RegressionProblem.from_data(np.array([[1.0], [2.0]]), np.array([1.0, 2.0]))


@pytest.fixture
def diagonal_problem():
    """Square data X = diag(1, 2) with y = (1, 0): L = 4, mu = 1."""
    return RegressionProblem.from_data(np.array([[1.0, 0.0], [0.0, 2.0]]), np.array([1.0, 0.0]))


class TestRegressionProblem:
    def test_hand_constants(self, hand_problem):
        assert hand_problem.smoothness == pytest.approx(5.0)
        assert hand_problem.strong_convexity == pytest.approx(5.0)
        assert hand_problem.kappa == pytest.approx(1.0)

    def test_diagonal_constants(self, diagonal_problem):
        assert diagonal_problem.smoothness == pytest.approx(4.0)
        assert diagonal_problem.strong_convexity == pytest.approx(1.0)
        assert diagonal_problem.kappa == pytest.approx(4.0)

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            RegressionProblem.from_data(np.ones((3, 2)), np.ones(3))

    def test_label_length(self):
        with pytest.raises(DimensionError):
            RegressionProblem.from_data(np.ones((3, 1)), np.ones(2))


class TestLossAndGradient:
    def test_loss_at_target_is_zero(self, hand_problem):
        assert loss(hand_problem, np.array([1.0])) == 0.0

    def test_loss_value(self, hand_problem):
        # 0.5 * (1^2 + 2^2) at theta = 0.
        assert loss(hand_problem, np.array([0.0])) == pytest.approx(2.5)

    def test_gradient_value(self, hand_problem):
        np.testing.assert_allclose(gradient(hand_problem, np.array([0.0])), [-5.0])

    def test_gradient_dimension(self, hand_problem):
        with pytest.raises(DimensionError):
            gradient(hand_problem, np.zeros(2))

    def test_finite_differences(self):
        rng = RandomSource(17)
        gen = np.random.default_rng(17)
        h = 1e-6
        for _ in range(100):
            task = make_task(12, 3, 1.0, rng)
            problem = RegressionProblem.from_data(task.x, gen.standard_normal(12))
            theta = gen.standard_normal(3)
            grad = gradient(problem, theta)
            numeric = np.array(
                [
                    (loss(problem, theta + h * e) - loss(problem, theta - h * e)) / (2 * h)
                    for e in np.eye(3)
                ]
            )
            np.testing.assert_allclose(numeric, grad, rtol=1e-5, atol=1e-6)


class TestRunGd:
    def test_hand_one_step(self, hand_problem):
        traj = run_gd(hand_problem, np.zeros(1), LoopConfig(loops=1))
        assert traj.theta_states[1][0] == pytest.approx(1.0, abs=1e-15)
        assert traj.losses[1] == pytest.approx(0.0, abs=1e-28)

    def test_diagonal_two_steps(self, diagonal_problem):
        config = LoopConfig(loops=2, step_schedule=ConstantSchedule(eta=0.25))
        traj = run_gd(diagonal_problem, np.zeros(2), config)
        np.testing.assert_allclose(traj.theta_states[1], [0.25, 0.0], atol=1e-15)
        np.testing.assert_allclose(traj.theta_states[2], [0.4375, 0.0], atol=1e-15)

    def test_zero_loops(self, hand_problem):
        traj = run_gd(hand_problem, np.array([0.3]), LoopConfig(loops=0))
        assert traj.loops == 0
        np.testing.assert_array_equal(traj.theta_states, [[0.3]])

    def test_records_distances(self, hand_problem):
        traj = run_gd(hand_problem, np.zeros(1), LoopConfig(loops=2), theta_star=np.array([1.0]))
        np.testing.assert_allclose(traj.param_errors, [1.0, 0.0, 0.0], atol=1e-15)

    def test_explicit_schedule(self, hand_problem):
        config = LoopConfig(loops=2, step_schedule=ExplicitSchedule(etas=[0.1, 0.05]))
        traj = run_gd(hand_problem, np.zeros(1), config)
        np.testing.assert_allclose(traj.theta_states[:, 0], [0.0, 0.5, 0.625], atol=1e-15)
        np.testing.assert_allclose(traj.step_sizes, [0.1, 0.05])

    def test_loss_non_increasing(self):
        rng = RandomSource(4)
        for _ in range(20):
            task = make_task(20, 4, 1.0, rng)
            problem = RegressionProblem.from_data(task.x, task.y)
            traj = run_gd(problem, np.zeros(4), LoopConfig(loops=60))
            assert np.all(np.diff(traj.losses) <= 1e-12)


class TestConstants:
    def test_gradient_lipschitz(self):
        rng = RandomSource(21)
        gen = np.random.default_rng(21)
        task = make_task(24, 4, 1.0, rng)
        problem = RegressionProblem.from_data(task.x, task.y)
        for _ in range(1000):
            a, b = gen.standard_normal(4), gen.standard_normal(4)
            ratio = np.linalg.norm(gradient(problem, a) - gradient(problem, b)) / np.linalg.norm(
                a - b
            )
            assert ratio <= problem.smoothness + 1e-9

    def test_strong_convexity(self):
        rng = RandomSource(22)
        gen = np.random.default_rng(22)
        task = make_task(24, 4, 1.0, rng)
        problem = RegressionProblem.from_data(task.x, gen.standard_normal(24))
        mu = problem.strong_convexity
        for _ in range(200):
            a, b = gen.standard_normal(4), gen.standard_normal(4)
            for gamma in np.linspace(0.0, 1.0, 11):
                mixed = loss(problem, gamma * a + (1 - gamma) * b)
                chord = gamma * loss(problem, a) + (1 - gamma) * loss(problem, b)
                curvature = 0.5 * mu * gamma * (1 - gamma) * np.sum((a - b) ** 2)
                assert mixed <= chord - curvature + 1e-9


class TestBounds:
    def test_param_bound_at_zero(self):
        assert theoretical_param_bound(0, BoundParams(kappa=2.0, radius=3.0)) == 9.0

    def test_prediction_bound_values(self):
        bounds = BoundParams(kappa=1.62, alpha=1.0)
        assert theoretical_prediction_bound(0, bounds) == 1.0
        assert theoretical_prediction_bound(200, bounds) == pytest.approx(
            math.exp(-200 / (2 * 1.62)), rel=1e-12
        )

    def test_prediction_bound_scales_with_alpha(self):
        bounds = BoundParams(kappa=4.0, alpha=-2.0)
        assert theoretical_prediction_bound(8, bounds) == pytest.approx(2.0 * math.exp(-1.0))

    def test_log_domain_below_underflow(self):
        bounds = BoundParams(kappa=1.0)
        assert theoretical_param_bound(2000, bounds) == 0.0
        assert log_theoretical_param_bound(2000, bounds) == pytest.approx(-2000.0)
        assert log_theoretical_prediction_bound(2000, bounds) == pytest.approx(-1000.0)

    def test_zero_radius(self):
        bounds = BoundParams(kappa=2.0, radius=0.0)
        assert theoretical_param_bound(5, bounds) == 0.0
        assert log_theoretical_param_bound(5, bounds) == -math.inf

    def test_negative_step_rejected(self):
        with pytest.raises(ValueError):
            theoretical_prediction_bound(-1, BoundParams(kappa=2.0))

    def test_kappa_below_one_rejected(self):
        with pytest.raises(ValidationError):
            BoundParams(kappa=0.5)

    @pytest.mark.parametrize("kappa", [1.0, 1.62, 4.57, 50.0])
    def test_contraction_majorized(self, kappa):
        bounds = BoundParams(kappa=kappa, radius=1.3)
        for t in range(0, 400, 7):
            assert contraction_param_bound(t, bounds) <= theoretical_param_bound(t, bounds) + 1e-300

    @pytest.mark.parametrize("kappa", [1.01, 2.0, 10.0, 100.0])
    def test_exponential_majorizes_contraction_factor(self, kappa):
        for t in range(1, 501):
            assert (1.0 - 1.0 / kappa) ** t <= math.exp(-t / kappa)
            bounds = BoundParams(kappa=kappa)
            assert contraction_param_bound(t, bounds) <= theoretical_param_bound(t, bounds)

    def test_contraction_exact_for_unit_kappa(self):
        assert contraction_param_bound(1, BoundParams(kappa=1.0)) == 0.0


class TestBoundParamsFor:
    def test_auto_schedule(self, diagonal_problem):
        bounds = bound_params_for(
            diagonal_problem,
            LoopConfig(loops=5),
            np.zeros(2),
            theta_star=np.array([0.6, 0.8]),
            alpha=2.0,
        )
        assert bounds.kappa == pytest.approx(4.0)
        assert bounds.radius == pytest.approx(1.0)
        assert bounds.alpha == 2.0

    def test_matching_constant_schedule(self, diagonal_problem):
        config = LoopConfig(loops=5, step_schedule=ConstantSchedule(eta=0.25))
        assert bound_params_for(diagonal_problem, config, np.zeros(2)).radius == 1.0

    def test_other_constant_schedule(self, diagonal_problem):
        config = LoopConfig(loops=5, step_schedule=ConstantSchedule(eta=0.1))
        with pytest.raises(ScheduleMismatchError):
            bound_params_for(diagonal_problem, config, np.zeros(2))

    def test_explicit_schedule(self, diagonal_problem):
        config = LoopConfig(loops=1, step_schedule=ExplicitSchedule(etas=[0.25]))
        with pytest.raises(ScheduleMismatchError):
            bound_params_for(diagonal_problem, config, np.zeros(2))


@pytest.mark.slow
def test_contraction_holds_on_random_instances():
    rng = RandomSource(500)
    for _ in range(200):
        task = make_task(32, 4, 1.0, rng)
        problem = RegressionProblem.from_data(task.x, task.y)
        config = LoopConfig(loops=200)
        traj = run_gd(problem, np.zeros(4), config, theta_star=task.theta_star)
        bounds = bound_params_for(problem, config, np.zeros(4), theta_star=task.theta_star)
        for t, dist in enumerate(traj.param_errors):
            assert dist**2 <= contraction_param_bound(t, bounds) + 1e-12


class TestLeastSquaresOptimum:
    @pytest.fixture
    def problem_and_optimum(self):
        task = make_task(32, 4, 1.0, RandomSource(12))
        problem = RegressionProblem.from_data(task.x, task.y)
        return problem, least_squares(task.x, task.y)

    def test_gradient_vanishes(self, problem_and_optimum):
        problem, theta_ls = problem_and_optimum
        np.testing.assert_allclose(gradient(problem, theta_ls), 0.0, atol=1e-10)

    def test_gd_stays_at_optimum(self, problem_and_optimum):
        problem, theta_ls = problem_and_optimum
        traj = run_gd(problem, theta_ls, LoopConfig(loops=25))
        np.testing.assert_allclose(
            traj.theta_states, np.tile(theta_ls, (26, 1)), rtol=0, atol=1e-10
        )

    def test_optimum_has_smallest_loss(self, problem_and_optimum):
        problem, theta_ls = problem_and_optimum
        best = loss(problem, theta_ls)
        gen = np.random.default_rng(3)
        for _ in range(100):
            assert best <= loss(problem, theta_ls + gen.standard_normal(4)) + 1e-12
