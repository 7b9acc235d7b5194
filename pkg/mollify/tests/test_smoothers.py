"""test_smoothers.py contains unittests for the Monte-Carlo smoothing estimators."""

import math
import unittest

import numpy as np

from mollify.core import RegularityProfile, SmootherKind
from mollify.objectives import NoisyObjective, quadratic, step, step_quadratic
from mollify.smoothers import (
    ess,
    estimate_gradient,
    grad_exp_smooth,
    grad_mean_smooth,
    log_mean_exp,
    rescale_to_target_ess,
    self_normalized_weights,
    smooth_value_exp,
    smooth_value_mean,
)
from mollify.utils import DegenerateWeightsError, DomainError, EvaluationError, InfeasibleTargetError, substream


def constant(value, dim=2):
    """Constant is a deterministic objective equal to value everywhere."""
    return NoisyObjective(
        name="constant",
        dim=dim,
        loss=lambda points, u: np.full(len(points), value),
        profile=RegularityProfile(alpha=1.0, beta_upper=1.0, deterministic=True),
    )


class TestWeights(unittest.TestCase):
    """TestWeights tests ESS and the self-normalised weights."""

    def test_ess(self):
        """test_ess tests the two extremes of the effective sample size."""
        self.assertEqual(ess([0.25, 0.25, 0.25, 0.25]), 4.0)
        self.assertEqual(ess([1.0, 0.0, 0.0, 0.0]), 1.0)
        with self.assertRaises(DomainError):
            ess([1.0, -0.5])

    def test_three_weights(self):
        """test_three_weights tests ess(0.5, 0.25, 0.25) = 8/3."""
        self.assertAlmostEqual(ess([0.5, 0.25, 0.25]), 8.0 / 3.0, places=12)

    def test_ess_scale_invariance(self):
        """test_ess_scale_invariance tests that multiplying every weight by c > 0 leaves the ESS unchanged."""
        w = np.random.default_rng(2).exponential(size=50)
        for c in (1e-8, 0.3, 7.0, 1e8):
            self.assertAlmostEqual(ess(c * w), ess(w), places=9)

    def test_shift_invariance(self):
        """test_shift_invariance tests that adding a constant to every loss leaves the weights unchanged."""
        losses = np.random.default_rng(3).uniform(0, 5, size=64)
        np.testing.assert_allclose(self_normalized_weights(losses), self_normalized_weights(losses + 1000.0), rtol=1e-9)

    def test_large_losses(self):
        """test_large_losses tests that losses around 1e6 do not underflow."""
        w = self_normalized_weights(np.array([1e6, 1e6 + 1.0, 1e6 + 2.0]))
        self.assertAlmostEqual(w.sum(), 1.0)
        self.assertGreater(w[0], w[1])

    def test_log_mean_exp(self):
        """test_log_mean_exp tests large arguments."""
        self.assertAlmostEqual(log_mean_exp([1000.0, 1000.0]), 1000.0)
        self.assertAlmostEqual(log_mean_exp([0.0, math.log(3.0)]), math.log(2.0))


class TestRescale(unittest.TestCase):
    """TestRescale tests rescale_to_target_ess."""

    def test_two_point_example(self):
        """test_two_point_example tests losses (0, ln 3) with target 1.6, solved by lambda = 1."""
        lam = rescale_to_target_ess(np.array([0.0, math.log(3.0)]), 1.6, tol=1e-9)
        self.assertAlmostEqual(lam, 1.0, places=6)

    def test_equal_losses(self):
        """test_equal_losses tests the lambda = 1 convention."""
        self.assertEqual(rescale_to_target_ess(np.full(10, 2.5), 5.0), 1.0)

    def test_infeasible(self):
        """test_infeasible tests targets above N and below the tied-minimum limit."""
        with self.assertRaises(InfeasibleTargetError):
            rescale_to_target_ess(np.array([0.0, 1.0]), 2.5)
        with self.assertRaises(InfeasibleTargetError):
            rescale_to_target_ess(np.array([0.0, 0.0, 0.0, 1.0, 2.0]), 2.0)

    def test_random_losses_hit_target(self):
        """test_random_losses_hit_target tests 100 random loss vectors of size 1024 at target 512."""
        rng = np.random.default_rng(7)
        for _ in range(100):
            losses = rng.exponential(scale=rng.uniform(0.1, 10.0), size=1024)
            lam = rescale_to_target_ess(losses, 512.0)
            achieved = ess(np.exp(-lam * (losses - losses.min())))
            self.assertLess(abs(achieved - 512.0), 5.12)


class TestEstimators(unittest.TestCase):
    """TestEstimators tests the gradient and value estimators."""

    def test_mean_smooth_constant_is_zero(self):
        """test_mean_smooth_constant_is_zero tests the centred estimator on a constant loss."""
        est = grad_mean_smooth(constant(3.0), [0.3, -0.2], 0.5, None, 256, np.random.default_rng(0))
        np.testing.assert_array_equal(est.gradient, np.zeros(2))
        self.assertEqual(est.ess, 256.0)

    def test_values_of_constant(self):
        """test_values_of_constant tests both smoothed values on a constant loss."""
        obj = constant(3.0)
        self.assertEqual(smooth_value_mean(obj, [0.0, 0.0], 1.0, None, 128, np.random.default_rng(0)), 3.0)
        self.assertAlmostEqual(smooth_value_exp(obj, [0.0, 0.0], 1.0, None, 128, np.random.default_rng(0)), 3.0)

    def test_mean_smooth_quadratic_value(self):
        """test_mean_smooth_quadratic_value tests E||sqrt(gamma) z||^2 / 2 = d gamma / 2."""
        value = smooth_value_mean(quadratic(2), [0.0, 0.0], 1.0, None, 200000, np.random.default_rng(1))
        self.assertAlmostEqual(value, 1.0, delta=0.02)

    def test_mean_smooth_quadratic_gradient(self):
        """test_mean_smooth_quadratic_gradient tests the unbiased estimate of theta within 4 standard errors."""
        theta = np.array([0.5, -1.0])
        est = grad_mean_smooth(quadratic(2), theta, 0.5, None, 100000, np.random.default_rng(2))
        self.assertTrue(np.all(np.abs(est.gradient - theta) < 4 * est.std_error))

    def test_exp_smooth_quadratic_gradient(self):
        """test_exp_smooth_quadratic_gradient tests theta / (1 + gamma) within 4 standard errors."""
        theta = np.array([0.5, -1.0])
        gamma = 0.5
        est = grad_exp_smooth(quadratic(2), theta, gamma, None, 100000, np.random.default_rng(4))
        self.assertTrue(np.all(np.abs(est.gradient - theta / (1 + gamma)) < 4 * est.std_error))
        np.testing.assert_allclose(est.gradient, (theta - est.posterior_mean) / gamma)
        self.assertEqual(est.rescale_lambda, 1.0)

    def test_exp_smooth_sandwich(self):
        """test_exp_smooth_sandwich tests posterior mean of the loss <= smoothed value <= plain mean."""
        obj = step_quadratic()
        est = grad_exp_smooth(obj, [0.1], 0.3, None, 4096, np.random.default_rng(5))
        plain = smooth_value_mean(obj, [0.1], 0.3, None, 4096, np.random.default_rng(5))
        self.assertLessEqual(est.posterior_loss_mean, est.value_estimate + 1e-12)
        self.assertLessEqual(est.value_estimate, plain + 1e-12)

    def test_target_ess(self):
        """test_target_ess tests that rescaling hits the requested ESS."""
        est = grad_exp_smooth(quadratic(2), [2.0, 2.0], 1.0, None, 1024, np.random.default_rng(6), target_ess=512)
        self.assertAlmostEqual(est.ess, 512.0, delta=0.01)
        self.assertNotEqual(est.rescale_lambda, 1.0)
        self.assertFalse(est.clamped)

    def test_target_ess_clamped_on_ties(self):
        """test_target_ess_clamped_on_ties tests that about N/2 samples tied at zero loss clamp lambda."""
        obj = NoisyObjective(
            name="flat_step",
            dim=1,
            loss=lambda points, u: (points[:, 0] < 0.0).astype(float),
            profile=RegularityProfile(alpha=0.0, beta_upper=0.0, deterministic=True),
        )
        est = grad_exp_smooth(obj, [0.0], 1.0, None, 512, np.random.default_rng(0), target_ess=100)
        self.assertTrue(est.clamped)

    def test_threads_do_not_change_result(self):
        """test_threads_do_not_change_result tests that chunked evaluation is bit-identical."""
        single = grad_exp_smooth(quadratic(2), [0.4, 0.1], 0.2, None, 1000, np.random.default_rng(8), threads=1)
        pooled = grad_exp_smooth(quadratic(2), [0.4, 0.1], 0.2, None, 1000, np.random.default_rng(8), threads=4)
        np.testing.assert_array_equal(single.gradient, pooled.gradient)

    def test_dispatch(self):
        """test_dispatch tests estimate_gradient."""
        est = estimate_gradient("mean", constant(1.0), [0.0, 0.0], 1.0, None, 16, np.random.default_rng(0))
        self.assertIsNone(est.posterior_mean)
        est = estimate_gradient(SmootherKind.EXP, constant(1.0), [0.0, 0.0], 1.0, None, 16, np.random.default_rng(0))
        self.assertIsNotNone(est.posterior_mean)

    def test_errors(self):
        """test_errors tests NaN, all-infinite losses and bad arguments."""
        nan = NoisyObjective(
            name="nan",
            dim=1,
            loss=lambda points, u: np.full(len(points), math.nan),
            profile=RegularityProfile(alpha=0.0, beta_upper=0.0),
        )
        with self.assertRaises(EvaluationError):
            grad_mean_smooth(nan, [0.0], 1.0, None, 8, np.random.default_rng(0))
        with self.assertRaises(DegenerateWeightsError):
            grad_exp_smooth(constant(math.inf, dim=1), [0.0], 1.0, None, 8, np.random.default_rng(0))
        with self.assertRaises(DomainError):
            grad_exp_smooth(constant(1.0), [0.0, 0.0], 0.0, None, 8, np.random.default_rng(0))
        with self.assertRaises(DomainError):
            grad_exp_smooth(constant(1.0), [0.0, 0.0], 1.0, None, 8, np.random.default_rng(0), target_ess=8)

    def test_exp_smooth_linear_gradient(self):
        """test_exp_smooth_linear_gradient tests that the exp-smoothed gradient of a.x is a."""
        a = np.array([1.5, -0.5])
        linear = NoisyObjective(
            name="linear",
            dim=2,
            loss=lambda points, u: points @ a,
            profile=RegularityProfile(alpha=1.0, beta_upper=1.0, deterministic=True),
        )
        est = grad_exp_smooth(linear, [0.3, 0.2], 0.5, None, 100000, substream(13, 0, "mc"))
        gap = np.abs(est.gradient - a)
        self.assertTrue(np.all(gap <= 3 * est.std_error), msg=f"{gap} vs SE {est.std_error}")

    def test_mean_smooth_step_value(self):
        """test_mean_smooth_step_value tests that 1{x < 0} smoothed at theta=0, gamma=1 is 1/2."""
        value = smooth_value_mean(step(), [0.0], 1.0, None, 100000, np.random.default_rng(14))
        # 1/2 within about 6 standard errors of a Bernoulli(1/2) mean
        self.assertAlmostEqual(value, 0.5, delta=0.01)

    def test_snis_error_shrinks_with_samples(self):
        """test_snis_error_shrinks_with_samples tests the mean error over 100 repetitions."""
        theta = np.array([1.0, -2.0])
        gamma = 0.5
        exact = theta / (1 + gamma)
        errors = []
        for n_samples in (100, 1000, 10000):
            gaps = [
                np.linalg.norm(
                    grad_exp_smooth(quadratic(2), theta, gamma, None, n_samples, substream(15, rep, "mc")).gradient
                    - exact
                )
                for rep in range(100)
            ]
            errors.append(np.mean(gaps))
        self.assertGreater(errors[0], errors[1])
        self.assertGreater(errors[1], errors[2])
