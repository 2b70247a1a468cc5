"""
Tests for the cross-engine checks.
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from looped_core import (
    BoundReport,
    ConstantSchedule,
    EquivalenceReport,
    ExplicitSchedule,
    HypothesisViolationError,
    LoopConfig,
    LoopTrajectory,
    PromptState,
    RandomSource,
    build_task,
    check_attention_oracle,
    check_bound,
    check_equivalence,
    check_frozen_context,
    make_task,
    run_loops,
    spectral_norm,
)
from looped_core.verify import attention_paths_agree, equivalence_scale


class TestCheckEquivalence:
    def test_hand_task_exact(self, hand_task):
        config = LoopConfig(loops=1, step_schedule=ConstantSchedule(eta=0.2))
        report = check_equivalence(hand_task, config)
        assert report.max_state_gap == 0.0
        assert report.output_gap == 0.0
        assert report.passed
        assert report.instance_seed == 7

    def test_zero_loops(self, random_task):
        report = check_equivalence(random_task, LoopConfig(loops=0))
        assert report.max_state_gap == 0.0
        assert report.output_gap == 0.0
        assert report.passed

    def test_tolerance_is_scaled(self, hand_task):
        report = check_equivalence(hand_task, LoopConfig(loops=1), tol=1e-9)
        # max(1, |alpha| = 2, ||X^T y|| = 5, L = 5)
        assert report.tolerance == pytest.approx(5e-9)
        assert equivalence_scale(hand_task, 5.0) == 5.0

    def test_nonzero_initial_query(self):
        task = build_task(
            np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
            np.array([0.6, 0.8]),
            alpha=-0.5,
            q0=np.array([0.3, -0.2]),
        )
        assert check_equivalence(task, LoopConfig(loops=40)).passed

    def test_fault_injection_fails(self, hand_task):
        config = LoopConfig(loops=1, step_schedule=ConstantSchedule(eta=0.2), inject_fault=True)
        report = check_equivalence(hand_task, config)
        assert not report.passed
        assert report.max_state_gap == pytest.approx(4.0)

    def test_deterministic(self, random_task):
        config = LoopConfig(loops=50)
        a = check_equivalence(random_task, config)
        b = check_equivalence(random_task, config)
        assert a.model_dump() == b.model_dump()

    def test_rejects_non_positive_tolerance(self, hand_task):
        with pytest.raises(ValueError):
            check_equivalence(hand_task, LoopConfig(loops=1), tol=0.0)

    @pytest.mark.slow
    def test_random_instances_and_schedules(self):
        gen = np.random.default_rng(2718)
        for trial in range(1000):
            d = int(gen.integers(1, 9))
            n = int(gen.integers(d + 1, 129))
            loops = int(gen.integers(1, 201))
            alpha = float(gen.choice([-1.0, 1.0]) * gen.uniform(0.1, 3.0))
            task = make_task(n, d, alpha, RandomSource(trial))
            smoothness = spectral_norm(task.x.T @ task.x)
            if trial % 2:
                schedule = ExplicitSchedule(
                    etas=list(gen.uniform(0.0, 1.0, loops) * (1.0 / smoothness) + 1e-12)
                )
            else:
                schedule = ConstantSchedule(eta=float(gen.uniform(0.1, 1.0) / smoothness))
            report = check_equivalence(task, LoopConfig(loops=loops, step_schedule=schedule))
            assert report.passed, report.summary_line()


class TestCheckBound:
    def test_hand_task_one_step_convergence(self, hand_task):
        report = check_bound(hand_task, 3)
        assert report.passed
        assert report.kappa == pytest.approx(1.0)
        assert report.per_step_margin[0] == pytest.approx(0.0, abs=1e-15)
        assert report.per_step_margin[1] == pytest.approx(2.0 * math.exp(-0.5))
        assert report.min_margin == 0.0

    def test_one_margin_per_step(self, random_task):
        report = check_bound(random_task, 20)
        assert len(report.per_step_margin) == 21
        assert report.min_margin == min(report.per_step_margin)

    def test_nonzero_query_rejected(self):
        task = build_task(np.array([[1.0], [2.0]]), np.array([1.0]), 1.0, q0=np.array([0.1]))
        with pytest.raises(HypothesisViolationError):
            check_bound(task, 5)

    def test_other_schedule_rejected(self, hand_task):
        with pytest.raises(HypothesisViolationError):
            check_bound(hand_task, 5, schedule=ConstantSchedule(eta=0.1))

    def test_uses_given_trajectory(self, random_task):
        traj = run_loops(random_task, LoopConfig(loops=10))
        assert check_bound(random_task, 10, trajectory=traj).model_dump() == (
            check_bound(random_task, 10).model_dump()
        )

    def test_trajectory_length_must_match(self, random_task):
        traj = run_loops(random_task, LoopConfig(loops=10))
        with pytest.raises(ValueError):
            check_bound(random_task, 11, trajectory=traj)

    def test_deep_underflow_compared_in_logs(self, hand_task):
        # exp(-t/2) drops below 1e-300 near t = 1383; the empirical error is exactly 0.
        report = check_bound(hand_task, 1500)
        assert report.passed
        assert report.per_step_margin[-1] == 0.0

    @staticmethod
    def _with_errors(traj, updates):
        errors = np.array(traj.per_step_errors)
        for t, value in updates.items():
            errors[t] = value
        return LoopTrajectory(
            q_states=traj.q_states,
            tf_output=traj.tf_output,
            step_sizes=traj.step_sizes,
            per_step_errors=errors,
        )

    def test_overshoot_below_underflow_floor_fails(self, hand_task):
        # At t = 1500 the bound is 2 exp(-750), about 1e-326; an error of 1e-305 exceeds it.
        traj = self._with_errors(run_loops(hand_task, LoopConfig(loops=1500)), {1500: 1e-305})
        report = check_bound(hand_task, 1500, trajectory=traj)
        assert not report.passed
        expected = math.log(2.0) - 750.0 - math.log(1e-305)
        assert report.per_step_margin[-1] == pytest.approx(expected, rel=1e-12)
        assert report.min_margin == report.per_step_margin[-1]

    def test_small_relative_overshoot_below_floor_fails(self, hand_task):
        log_bound = math.log(2.0) - 700.0
        traj = self._with_errors(
            run_loops(hand_task, LoopConfig(loops=1500)), {1400: math.exp(log_bound + 1e-6)}
        )
        report = check_bound(hand_task, 1500, trajectory=traj)
        assert not report.passed
        assert report.per_step_margin[1400] == pytest.approx(-1e-6, rel=1e-3)

    def test_error_under_bound_below_floor_passes(self, hand_task):
        log_bound = math.log(2.0) - 700.0
        traj = self._with_errors(
            run_loops(hand_task, LoopConfig(loops=1500)), {1400: math.exp(log_bound - 0.5)}
        )
        report = check_bound(hand_task, 1500, trajectory=traj)
        assert report.passed
        assert report.per_step_margin[1400] == 0.0

    def test_default_sweep_dominance(self):
        for n in (16, 32, 64, 128):
            for trial in range(10):
                task = make_task(n, 4, 1.0, RandomSource.for_trial(0, trial))
                report = check_bound(task, 200)
                assert report.passed, report.summary_line()

    def test_report_consistency_enforced(self):
        with pytest.raises(ValidationError):
            BoundReport(
                instance_seed=0, kappa=2.0, per_step_margin=[-1.0], min_margin=-1.0, passed=True
            )


class TestAttentionOracle:
    def test_hand_prompt(self):
        prompt = PromptState(z=np.array([[1.0, 1.0], [2.0, 2.0], [0.0, 2.0]]), n=2, d=1)
        assert attention_paths_agree(prompt)

    def test_zero_query_zero_labels(self):
        prompt = PromptState(z=np.array([[1.0, 0.0], [3.0, 0.0], [0.0, 1.0]]), n=2, d=1)
        assert attention_paths_agree(prompt)

    def test_random_prompts(self):
        assert check_attention_oracle(32, 8, 1000, RandomSource(1))

    def test_small_prompts(self):
        assert check_attention_oracle(1, 1, 50, RandomSource(2))

    def test_zero_trials(self):
        assert check_attention_oracle(4, 2, 0, RandomSource(3))

    def test_rejects_empty_dimensions(self):
        with pytest.raises(ValueError):
            check_attention_oracle(0, 2, 1, RandomSource(3))


class TestFrozenContext:
    def test_auto_schedule(self, random_task):
        assert check_frozen_context(random_task, LoopConfig(loops=50))

    def test_explicit_schedule(self, hand_task):
        config = LoopConfig(loops=3, step_schedule=ExplicitSchedule(etas=[0.1, 0.2, 0.05]))
        assert check_frozen_context(hand_task, config)


def test_equivalence_report_consistency_enforced():
    with pytest.raises(ValidationError):
        EquivalenceReport(
            instance_seed=0, max_state_gap=1.0, output_gap=0.0, passed=True, tolerance=1e-9
        )
