"""test_oracle.py contains unittests for the quadrature oracle and its agreement with the estimators."""

import math
import unittest

import numpy as np
from scipy.special import ndtr

from mollify.core import SmootherKind
from mollify.objectives import noisy_quadratic, quadratic, staircase, step, step_quadratic
from mollify.oracle import (
    QuadratureSpec,
    oracle_exp_grad,
    oracle_exp_value,
    oracle_grad,
    oracle_mean_grad,
    oracle_mean_value,
    oracle_posterior_loss_mean,
    quadratic_exp_grad,
    step_exp_grad,
    step_mean_grad,
)
from mollify.smoothers import estimate_gradient
from mollify.utils import DomainError, OracleDimensionError, substream

# grid points near each objective's features, so every gamma sees some variation
GRIDS = {
    "quadratic": [[0.5, -1.0], [0.0, 0.0], [1.0, 1.0], [-0.3, 0.7], [2.0, -0.5]],
    "step": [[-0.2], [-0.1], [0.0], [0.1], [0.25]],
    "step_quadratic": [[-0.2], [-0.1], [0.0], [0.1], [0.25]],
    "noisy_quadratic": [[0.5, -1.0], [0.0, 0.0], [1.0, 1.0], [-0.3, 0.7], [2.0, -0.5]],
    "staircase": [[0.45, 0.55], [-0.6, 0.4], [0.35, -0.5], [1.1, -0.9], [-0.55, -0.45]],
}
GAMMAS = (1.0, 0.1, 0.01)


def corpus():
    """Corpus yields (objective, field, grid) for every builtin objective with d <= 2."""
    for obj in (quadratic(2), step(), step_quadratic(), noisy_quadratic(2), staircase(2)):
        u = obj.sample_noise(substream(0, 0, "noise"))
        yield obj, u, np.array(GRIDS[obj.name])


class TestQuadratureSpec(unittest.TestCase):
    """TestQuadratureSpec tests the quadrature settings."""

    def test_defaults(self):
        """test_defaults tests the per-dimension defaults."""
        self.assertEqual(QuadratureSpec.default_for(2).n_nodes, 512)
        self.assertEqual(QuadratureSpec.default_for(3).n_nodes, 96)

    def test_invalid(self):
        """test_invalid tests the dimension limit and the node and truncation floors."""
        with self.assertRaises(OracleDimensionError):
            QuadratureSpec.default_for(4)
        with self.assertRaises(OracleDimensionError):
            oracle_mean_value(quadratic(5).field(), np.zeros(5), 1.0)
        with self.assertRaises(DomainError):
            QuadratureSpec(n_nodes=10)
        with self.assertRaises(DomainError):
            QuadratureSpec(truncation=4.0)
        with self.assertRaises(DomainError):
            oracle_mean_value(step().field(), [0.0], 0.0)


class TestClosedForms(unittest.TestCase):
    """TestClosedForms tests the oracle against closed forms to 1e-8."""

    def test_quadratic(self):
        """test_quadratic tests grad = theta (mean) and theta / (1 + gamma) (exp)."""
        field = quadratic(2).field()
        for theta in GRIDS["quadratic"]:
            for gamma in GAMMAS:
                np.testing.assert_allclose(oracle_mean_grad(field, theta, gamma), theta, atol=1e-8)
                expected = quadratic_exp_grad(theta, gamma)
                np.testing.assert_allclose(oracle_exp_grad(field, theta, gamma), expected, atol=1e-8)

    def test_quadratic_values(self):
        """test_quadratic_values tests the smoothed values of ||x||^2 / 2 in dimension 2."""
        field = quadratic(2).field()
        self.assertAlmostEqual(oracle_mean_value(field, [0.0, 0.0], 1.0), 1.0, places=8)
        # -log E exp(-||sqrt(gamma) z + theta||^2 / 2) = ||theta||^2 / (2 (1 + gamma)) + d/2 log(1 + gamma)
        expected = 2.0 / (2 * 1.5) + math.log(1.5)
        self.assertAlmostEqual(oracle_exp_value(field, [1.0, 1.0], 0.5), expected, places=8)

    def test_step(self):
        """test_step tests the normal-CDF forms of the smoothed step."""
        field = step().field()
        for theta in (-0.7, -0.05, 0.0, 0.2, 1.5):
            for gamma in GAMMAS:
                s = math.sqrt(gamma)
                self.assertAlmostEqual(oracle_mean_value(field, [theta], gamma), ndtr(-theta / s), places=8)
                mean_grad = oracle_mean_grad(field, [theta], gamma)
                np.testing.assert_allclose(mean_grad, step_mean_grad([theta], gamma), atol=1e-8)
                exp_grad = oracle_exp_grad(field, [theta], gamma)
                np.testing.assert_allclose(exp_grad, step_exp_grad([theta], gamma), atol=1e-8)

    def test_dispatch(self):
        """test_dispatch tests oracle_grad."""
        field = quadratic(1).field()
        np.testing.assert_allclose(oracle_grad("exp", field, [1.0], 1.0), [0.5], atol=1e-8)
        np.testing.assert_allclose(oracle_grad(SmootherKind.MEAN, field, [1.0], 1.0), [1.0], atol=1e-8)

    def test_plain_callable(self):
        """test_plain_callable tests that a batch callable without breakpoints is accepted."""
        value = oracle_mean_value(lambda x: np.sum(x**2, axis=1), [0.0, 0.0, 0.0], 1.0)
        self.assertAlmostEqual(value, 3.0, places=6)


class TestSandwich(unittest.TestCase):
    """TestSandwich tests posterior mean of l <= exp-smoothed value <= mean-smoothed value."""

    def test_corpus(self):
        """test_corpus tests the sandwich at every corpus grid point."""
        for obj, u, grid in corpus():
            field = obj.field(u)
            for theta in grid:
                for gamma in GAMMAS:
                    lower = oracle_posterior_loss_mean(field, theta, gamma)
                    middle = oracle_exp_value(field, theta, gamma)
                    upper = oracle_mean_value(field, theta, gamma)
                    self.assertLessEqual(lower, middle + 1e-8, msg=f"{obj.name} {theta} {gamma}")
                    self.assertLessEqual(middle, upper + 1e-8, msg=f"{obj.name} {theta} {gamma}")


class TestScaling(unittest.TestCase):
    """TestScaling tests the gamma^(-1/2) growth of the smoothed step gradient."""

    def test_slope(self):
        """test_slope tests the log-log slope of the largest gradient over a grid against gamma."""
        field = step().field()
        gammas = np.array([1.0, 0.1, 0.01, 0.001])
        grid = np.linspace(-1.0, 1.0, 41)
        peaks = [max(abs(oracle_mean_grad(field, [t], g)[0]) for t in grid) for g in gammas]
        slope = np.polyfit(np.log(gammas), np.log(peaks), 1)[0]
        self.assertGreaterEqual(slope, -0.6)
        self.assertLessEqual(slope, -0.4)


class TestConsistency(unittest.TestCase):
    """TestConsistency tests the oracle against itself."""

    def test_gradients_match_finite_differences(self):
        """test_gradients_match_finite_differences tests both gradients against central differences of the values."""
        h = 1e-5
        for obj, u, grid in corpus():
            field = obj.field(u)
            for theta in grid[:2]:
                for gamma in (1.0, 0.1):
                    for grad, value in ((oracle_mean_grad, oracle_mean_value), (oracle_exp_grad, oracle_exp_value)):
                        numeric = [
                            (value(field, theta + e, gamma) - value(field, theta - e, gamma)) / (2 * h)
                            for e in np.eye(theta.size) * h
                        ]
                        np.testing.assert_allclose(
                            grad(field, theta, gamma), numeric, atol=1e-6, err_msg=f"{obj.name} {theta} {gamma}"
                        )

    def test_doubling_nodes(self):
        """test_doubling_nodes tests that twice the default node count moves the values by less than 1e-9."""
        for obj, u, grid in corpus():
            field = obj.field(u)
            finer = QuadratureSpec(n_nodes=2 * QuadratureSpec.default_for(obj.dim).n_nodes, dim=obj.dim)
            for theta in grid[:2]:
                for gamma in GAMMAS:
                    for value in (oracle_mean_value, oracle_exp_value):
                        self.assertAlmostEqual(
                            value(field, theta, gamma), value(field, theta, gamma, finer), delta=1e-9, msg=obj.name
                        )

    def test_step_value_grows_with_gamma(self):
        """test_step_value_grows_with_gamma tests that Phi(-theta / sqrt(gamma)) rises toward 1/2 for theta > 0."""
        field = step().field()
        gammas = (0.1, 1.0, 10.0, 100.0, 1e4)
        for theta in (0.1, 0.5, 1.0):
            values = [oracle_mean_value(field, [theta], gamma) for gamma in gammas]
            self.assertTrue(all(a < b for a, b in zip(values, values[1:])), msg=f"{theta}: {values}")
            self.assertLess(values[-1], 0.5)
            self.assertGreater(values[-1], 0.49)


class TestEstimatorAgreement(unittest.TestCase):
    """TestEstimatorAgreement tests Monte-Carlo gradients against the oracle in standard-error units.

    Every coordinate must lie within max_se standard errors. At most max_beyond_three_se of the
    roughly 120 coordinates per smoother may sit beyond 3 standard errors, which is about what
    the 0.27% two-sided normal tail predicts.
    """

    n_samples = 100000
    max_se = 4.0
    max_beyond_three_se = 3

    def check(self, kind):
        """Check compares every corpus grid point and gamma for one smoother."""
        index = 0
        beyond = []
        for obj, u, grid in corpus():
            field = obj.field(u)
            for theta in grid:
                for gamma in GAMMAS:
                    index += 1
                    est = estimate_gradient(kind, obj, theta, gamma, u, self.n_samples, substream(9, index, "mc"))
                    reference = oracle_grad(kind, field, theta, gamma)
                    gap = np.abs(est.gradient - reference)
                    self.assertTrue(
                        np.all(gap <= self.max_se * est.std_error),
                        msg=f"{kind.value} {obj.name} theta={theta} gamma={gamma}: {gap} vs SE {est.std_error}",
                    )
                    if np.any(gap > 3.0 * est.std_error):
                        beyond.append((obj.name, list(theta), gamma))
        self.assertLessEqual(len(beyond), self.max_beyond_three_se, msg=f"{kind.value} beyond 3 SE: {beyond}")

    def test_mean_smooth(self):
        """test_mean_smooth tests the mean smoother."""
        self.check(SmootherKind.MEAN)

    def test_exp_smooth(self):
        """test_exp_smooth tests the exponential smoother, including theta / (1 + gamma) on the quadratic."""
        self.check(SmootherKind.EXP)

    def test_quadratic_example_within_three_se(self):
        """test_quadratic_example_within_three_se tests theta=(1, -2), gamma=0.5 at 3 standard errors."""
        theta = np.array([1.0, -2.0])
        obj = quadratic(2)
        for kind, expected in ((SmootherKind.MEAN, theta), (SmootherKind.EXP, np.array([2.0 / 3.0, -4.0 / 3.0]))):
            est = estimate_gradient(kind, obj, theta, 0.5, None, self.n_samples, substream(10, 0, "mc"))
            gap = np.abs(est.gradient - expected)
            self.assertTrue(np.all(gap <= 3.0 * est.std_error), msg=f"{kind.value}: {gap} vs SE {est.std_error}")
