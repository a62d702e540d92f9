"""
SGD with momentum, componentwise gradient clipping and exponential
learning-rate decay floored at lr_min.
"""
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .circuits import ParamTensor
from .errors import ConfigurationError, NumericalError


@dataclass(frozen=True)
class OptimizerConfig:
    lr_init: float = 0.1
    lr_min: float = 0.01
    decay: float = 1.0
    momentum: float = 0.0
    grad_clip: Optional[float] = 0.5

    def validate(self) -> None:
        if not 0 < self.lr_min <= self.lr_init:
            raise ConfigurationError("learning rates need 0 < lr_min <= lr_init, got {} and {}".format(
                self.lr_min, self.lr_init))
        if not 0 < self.decay <= 1:
            raise ConfigurationError("decay must lie in (0, 1], got {}".format(self.decay))
        if not 0 <= self.momentum < 1:
            raise ConfigurationError("momentum must lie in [0, 1), got {}".format(self.momentum))
        if self.grad_clip is not None and not self.grad_clip > 0:
            raise ConfigurationError("grad_clip must be positive, got {}".format(self.grad_clip))

    def lr_at(self, step_count: int) -> float:
        return max(self.lr_min, self.lr_init * self.decay ** step_count)


@dataclass(frozen=True)
class OptimizerState:
    velocity: np.ndarray
    lr: float
    step_count: int = 0


def new_optimizer_state(cfg: OptimizerConfig, n_params: int) -> OptimizerState:
    cfg.validate()
    return OptimizerState(np.zeros(n_params), cfg.lr_at(0), 0)


def momentum_step(values, grad, opt: OptimizerState, cfg: OptimizerConfig):
    """
    One update of a flat parameter vector. Returns (values, state).
    """
    values = np.asarray(values, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if grad.shape != values.shape or opt.velocity.shape != values.shape:
        raise ConfigurationError("gradient of shape {} does not match parameters of shape {}".format(
            grad.shape, values.shape))
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite gradient at optimizer step {}".format(opt.step_count))
    if cfg.grad_clip is not None:
        grad = np.clip(grad, -cfg.grad_clip, cfg.grad_clip)
    velocity = cfg.momentum * opt.velocity - opt.lr * grad
    step_count = opt.step_count + 1
    return values + velocity, replace(opt, velocity=velocity, lr=cfg.lr_at(step_count), step_count=step_count)


def sgd_momentum_update(theta: ParamTensor, grad, opt: OptimizerState, cfg: OptimizerConfig):
    grad = np.asarray(grad, dtype=float).reshape(-1)
    values, opt = momentum_step(theta.flat, grad, opt, cfg)
    return ParamTensor(values.reshape(theta.values.shape)), opt
