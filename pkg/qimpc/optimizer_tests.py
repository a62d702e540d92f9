import unittest

import numpy as np

from qimpc.circuits import ParamTensor
from qimpc.errors import ConfigurationError, NumericalError
from qimpc.optimizer import OptimizerConfig, momentum_step, new_optimizer_state, sgd_momentum_update

PENDULUM_SCHEDULE = OptimizerConfig(lr_init=0.3, lr_min=0.01, decay=0.95, momentum=0.85, grad_clip=0.5)


class TestSgdMomentum(unittest.TestCase):

    def setUp(self):
        self.theta = ParamTensor(np.arange(6, dtype=float).reshape(1, 2, 3))

    def test_zero_gradient_only_decays_lr(self):
        opt = new_optimizer_state(PENDULUM_SCHEDULE, 6)
        theta, opt = sgd_momentum_update(self.theta, np.zeros(6), opt, PENDULUM_SCHEDULE)
        np.testing.assert_array_equal(theta.values, self.theta.values)
        self.assertAlmostEqual(opt.lr, 0.285)
        self.assertEqual(opt.step_count, 1)

    def test_clipped_step_without_momentum(self):
        cfg = OptimizerConfig(lr_init=0.3, lr_min=0.01, decay=1.0, momentum=0.0, grad_clip=0.5)
        opt = new_optimizer_state(cfg, 6)
        theta, _ = sgd_momentum_update(self.theta, np.ones(6), opt, cfg)
        np.testing.assert_allclose(theta.values, self.theta.values - 0.15)

    def test_momentum_accumulates(self):
        cfg = OptimizerConfig(lr_init=0.1, lr_min=0.1, decay=1.0, momentum=0.5, grad_clip=None)
        opt = new_optimizer_state(cfg, 1)
        values, opt = momentum_step(np.zeros(1), np.ones(1), opt, cfg)
        values, opt = momentum_step(values, np.ones(1), opt, cfg)
        np.testing.assert_allclose(opt.velocity, [-0.15])
        np.testing.assert_allclose(values, [-0.25])

    def test_schedule_is_exact_and_floored(self):
        opt = new_optimizer_state(PENDULUM_SCHEDULE, 6)
        theta = self.theta
        for k in range(1, 120):
            theta, opt = sgd_momentum_update(theta, np.full(6, 0.01), opt, PENDULUM_SCHEDULE)
            self.assertEqual(opt.lr, max(0.01, 0.3 * 0.95 ** k))
            self.assertGreaterEqual(opt.lr, 0.01)
        self.assertEqual(opt.lr, 0.01)

    def test_non_finite_gradient(self):
        opt = new_optimizer_state(PENDULUM_SCHEDULE, 6)
        with self.assertRaises(NumericalError):
            sgd_momentum_update(self.theta, np.array([0, 0, np.nan, 0, 0, 0.0]), opt, PENDULUM_SCHEDULE)

    def test_shape_mismatch(self):
        opt = new_optimizer_state(PENDULUM_SCHEDULE, 6)
        with self.assertRaises(ConfigurationError):
            sgd_momentum_update(self.theta, np.zeros(5), opt, PENDULUM_SCHEDULE)

    def test_config_validation(self):
        with self.assertRaises(ConfigurationError):
            OptimizerConfig(lr_init=0.01, lr_min=0.1).validate()
        with self.assertRaises(ConfigurationError):
            OptimizerConfig(decay=1.5).validate()
        with self.assertRaises(ConfigurationError):
            OptimizerConfig(momentum=1.0).validate()
        with self.assertRaises(ConfigurationError):
            OptimizerConfig(grad_clip=0.0).validate()


if __name__ == '__main__':
    unittest.main()
