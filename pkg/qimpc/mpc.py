"""
Online QI-MPC loop and its classical counterpart.

At every timestep the circuit proposes a control for the current state, the
control is clipped and applied, and theta takes one optimizer step on the
stage loss of the resulting state. Steps are strictly sequential.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .circuits import (
    AnsatzSpec,
    ControlHead,
    EncoderSpec,
    ParamTensor,
    compute_loss_gradient,
    evaluate_controls,
    init_params,
    plant_control_jacobian,
)
from .control import check_bounds, clip_controls
from .errors import ConfigurationError, NumericalError, PlantSingularityError, RunAbortedError
from .losses import LossSpec, stage_loss, stage_loss_grad
from .optimizer import OptimizerConfig, momentum_step, new_optimizer_state, sgd_momentum_update

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MpcConfig:
    total_steps: int
    u_min: tuple
    u_max: tuple
    horizon: int = 1
    lookahead: int = 1
    tolerance: Optional[float] = None
    shots: Optional[int] = None
    seed: int = 0

    def validate(self, control_dim=None) -> None:
        if self.total_steps < 1:
            raise ConfigurationError("total_steps must be at least 1, got {}".format(self.total_steps))
        if self.horizon < 1:
            raise ConfigurationError("horizon must be at least 1, got {}".format(self.horizon))
        if self.lookahead < 1:
            raise ConfigurationError("lookahead must be at least 1, got {}".format(self.lookahead))
        if self.tolerance is not None and not self.tolerance > 0:
            raise ConfigurationError("tolerance must be positive, got {}".format(self.tolerance))
        if self.shots is not None and self.shots < 1:
            raise ConfigurationError("shots must be at least 1, got {}".format(self.shots))
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative, got {}".format(self.seed))
        u_min, _ = check_bounds(self.u_min, self.u_max)
        if control_dim is not None and u_min.shape != (control_dim,):
            raise ConfigurationError("bounds cover {} control(s) but the plant takes {}".format(
                u_min.size, control_dim))


@dataclass
class TrajectoryRecord:
    step: int
    x: np.ndarray
    raw: np.ndarray
    clipped: np.ndarray
    loss: float
    lr: float
    grad_norm: float


@dataclass
class TrajectoryLog:
    records: List[TrajectoryRecord] = field(default_factory=list)
    theta: Optional[np.ndarray] = None
    converged: bool = False
    state_dim: int = 0
    control_dim: int = 0

    def __len__(self):
        return len(self.records)

    def states(self) -> np.ndarray:
        return np.array([r.x for r in self.records])

    def raw_controls(self) -> np.ndarray:
        return np.array([r.raw for r in self.records])

    def controls(self) -> np.ndarray:
        return np.array([r.clipped for r in self.records])

    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    @property
    def initial_loss(self) -> float:
        return self.records[0].loss if self.records else float("nan")

    @property
    def final_loss(self) -> float:
        return self.records[-1].loss if self.records else float("nan")


def step_seed(seed: int, step: int) -> int:
    return int(np.random.SeedSequence([seed, step]).generate_state(1)[0])


def _check_run_args(plant, loss, mpc, x0):
    mpc.validate(control_dim=plant.control_dim)
    loss.validate(state_dim=plant.state_dim, control_dim=plant.control_dim)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (plant.state_dim,):
        raise ConfigurationError("initial state has shape {} but {} needs length {}".format(
            x0.shape, plant.name, plant.state_dim))
    if not np.all(np.isfinite(x0)):
        raise ConfigurationError("initial state must be finite, got {}".format(x0.tolist()))
    return x0


def _converged(x_next, loss, mpc):
    if mpc.tolerance is None:
        return False
    return float(np.linalg.norm(x_next - np.asarray(loss.x_target))) < mpc.tolerance


def _policy_gradient(theta, x, u_prev, plant, loss, encoder, ansatz, head, mpc, workers):
    """
    Gradient of the first stage, averaged with the stages reached by rolling
    the current policy `lookahead - 1` steps further.
    """
    first = compute_loss_gradient(theta, x, plant, loss, encoder, ansatz, head, mpc.u_min, mpc.u_max,
                                  u_prev=u_prev, workers=workers)
    grads = [first.grad]
    current = first
    for _ in range(mpc.lookahead - 1):
        current = compute_loss_gradient(theta, current.x_next, plant, loss, encoder, ansatz, head,
                                        mpc.u_min, mpc.u_max, u_prev=current.clipped, workers=workers)
        grads.append(current.grad)
    return first, np.mean(grads, axis=0)


def run_qimpc(plant, encoder: EncoderSpec, ansatz: AnsatzSpec, head: ControlHead, loss: LossSpec, mpc: MpcConfig,
              opt_cfg: OptimizerConfig, x0, theta: ParamTensor = None, workers: int = 1) -> TrajectoryLog:
    x0 = _check_run_args(plant, loss, mpc, x0)
    head.validate(ansatz.n_qubits, control_dim=plant.control_dim)
    if theta is None:
        theta = init_params(ansatz, mpc.seed)
    theta.check(ansatz)
    opt = new_optimizer_state(opt_cfg, ansatz.n_params)
    trajectory = TrajectoryLog(theta=theta.values.copy(), state_dim=plant.state_dim, control_dim=plant.control_dim)
    step = 0
    try:
        for episode in range(mpc.horizon):
            x = x0.copy()
            u_prev = np.zeros(plant.control_dim)
            for _ in range(mpc.total_steps):
                first, grad = _policy_gradient(theta, x, u_prev, plant, loss, encoder, ansatz, head, mpc, workers)
                raw, clipped, x_next, value = first.raw, first.clipped, first.x_next, first.loss
                if mpc.shots is not None:
                    raw, physical = evaluate_controls(encoder, ansatz, head, theta, x, mpc.shots,
                                                      step_seed(mpc.seed, step))
                    clipped = clip_controls(physical, mpc.u_min, mpc.u_max)
                    x_next = plant.step(x, clipped)
                    value = stage_loss(loss, x_next, clipped, u_prev, theta.values)
                    if not np.all(np.isfinite(x_next)) or not np.isfinite(value):
                        raise NumericalError("non-finite sampled step (x={}, u={})".format(
                            x.tolist(), clipped.tolist()))
                lr = opt.lr
                theta, opt = sgd_momentum_update(theta, grad, opt, opt_cfg)
                trajectory.records.append(TrajectoryRecord(
                    step, x.copy(), np.array(raw), np.array(clipped), float(value), lr, float(np.linalg.norm(grad))))
                trajectory.theta = theta.values.copy()
                log.debug("episode %d step %d u=%s loss=%.6g", episode, step, clipped.tolist(), value)
                step += 1
                u_prev = clipped
                x = x_next
                if _converged(x_next, loss, mpc):
                    trajectory.converged = True
                    log.info("converged after %d step(s)", step)
                    return trajectory
    except (PlantSingularityError, NumericalError) as err:
        raise RunAbortedError("run aborted at step {}: {}".format(step, err), trajectory) from err
    return trajectory


def run_classical_baseline(plant, loss: LossSpec, mpc: MpcConfig, opt_cfg: OptimizerConfig, x0) -> TrajectoryLog:
    """
    Same loop with the control vector itself as the decision variable,
    projected back onto the bounds after every update.
    """
    x0 = _check_run_args(plant, loss, mpc, x0)
    u_min, u_max = np.asarray(mpc.u_min, dtype=float), np.asarray(mpc.u_max, dtype=float)
    u = clip_controls(np.zeros(plant.control_dim), u_min, u_max)
    opt = new_optimizer_state(opt_cfg, plant.control_dim)
    trajectory = TrajectoryLog(state_dim=plant.state_dim, control_dim=plant.control_dim)
    step = 0
    try:
        for _ in range(mpc.horizon):
            x = x0.copy()
            u_prev = np.zeros(plant.control_dim)
            for _ in range(mpc.total_steps):
                clipped = clip_controls(u, u_min, u_max)
                x_next = plant.step(x, clipped)
                value = stage_loss(loss, x_next, clipped, u_prev)
                if not np.all(np.isfinite(x_next)) or not np.isfinite(value):
                    raise NumericalError("non-finite baseline step (x={}, u={})".format(x.tolist(), clipped.tolist()))
                dj_dx, dj_du, _ = stage_loss_grad(loss, x_next, clipped, u_prev)
                grad = dj_dx @ plant_control_jacobian(plant, x, clipped) + dj_du
                lr = opt.lr
                raw = u.copy()
                u, opt = momentum_step(u, grad, opt, opt_cfg)
                u = clip_controls(u, u_min, u_max)
                trajectory.records.append(TrajectoryRecord(
                    step, x.copy(), raw, clipped, float(value), lr, float(np.linalg.norm(grad))))
                log.debug("baseline step %d u=%s loss=%.6g", step, clipped.tolist(), value)
                step += 1
                u_prev = clipped
                x = x_next
                if _converged(x_next, loss, mpc):
                    trajectory.converged = True
                    return trajectory
    except (PlantSingularityError, NumericalError) as err:
        raise RunAbortedError("baseline aborted at step {}: {}".format(step, err), trajectory) from err
    return trajectory
