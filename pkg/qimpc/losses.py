"""
Stage losses J(x', u, u_prev, theta) and their analytic partial derivatives.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from .errors import ConfigurationError


class LossKind(Enum):
    MSE_TO_TARGET = "mse-to-target"
    ALGORITHM_ONE = "algorithm-one"
    BUILDING = "building"
    VEHICLE = "vehicle"
    DOUBLE_PENDULUM = "double-pendulum"


WEIGHT_COUNTS = {
    LossKind.MSE_TO_TARGET: 0,
    LossKind.ALGORITHM_ONE: 1,
    LossKind.BUILDING: 2,
    LossKind.VEHICLE: 4,
    LossKind.DOUBLE_PENDULUM: 3,
}

# lateral offset and heading of the (s, v, y, heading) vehicle state
_VEHICLE_TRACKED = (2, 3)


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind
    x_target: Tuple[float, ...]
    weights: Tuple[float, ...] = ()

    def validate(self, state_dim=None, control_dim=None) -> None:
        expected = WEIGHT_COUNTS[self.kind]
        if len(self.weights) != expected:
            raise ConfigurationError("{} loss takes {} weight(s), got {}".format(
                self.kind.value, expected, len(self.weights)))
        for w in self.weights:
            if not 0.0 <= w <= 1.0:
                raise ConfigurationError("loss weights must lie in [0, 1], got {}".format(w))
        if state_dim is not None and len(self.x_target) != state_dim:
            raise ConfigurationError("target has {} entries but the plant state has {}".format(
                len(self.x_target), state_dim))
        if self.kind is LossKind.VEHICLE and len(self.x_target) != 4:
            raise ConfigurationError("vehicle loss needs a 4-entry state, got {}".format(len(self.x_target)))
        if self.kind is LossKind.VEHICLE and control_dim not in (None, 2):
            raise ConfigurationError("vehicle loss needs 2 controls, got {}".format(control_dim))


def _prepare(spec, x_next, u, u_prev, theta):
    x_next = np.asarray(x_next, dtype=float)
    u = np.asarray(u, dtype=float)
    spec.validate(state_dim=x_next.shape[0], control_dim=u.shape[0])
    u_prev = np.zeros_like(u) if u_prev is None else np.asarray(u_prev, dtype=float)
    if u_prev.shape != u.shape:
        raise ConfigurationError("previous control of shape {} does not match control of shape {}".format(
            u_prev.shape, u.shape))
    theta = np.zeros(0) if theta is None else np.asarray(theta, dtype=float)
    return x_next, u, u_prev, theta, x_next - np.asarray(spec.x_target, dtype=float)


def stage_loss(spec: LossSpec, x_next, u, u_prev=None, theta=None) -> float:
    x_next, u, u_prev, theta, err = _prepare(spec, x_next, u, u_prev, theta)
    w = spec.weights
    if spec.kind is LossKind.MSE_TO_TARGET:
        return float(err @ err)
    if spec.kind is LossKind.ALGORITHM_ONE:
        return float(err @ err + w[0] * (u @ u))
    du = u - u_prev
    if spec.kind is LossKind.BUILDING:
        return float(err @ err + w[0] * (u @ u) + w[1] * (du @ du))
    if spec.kind is LossKind.VEHICLE:
        tracked = err[list(_VEHICLE_TRACKED)]
        return float(tracked @ tracked + w[0] * u[0] ** 2 + w[1] * u[1] ** 2
                     + w[2] * du[0] ** 2 + w[3] * du[1] ** 2)
    return float(w[0] * (err @ err) + w[1] * (u @ u) + w[2] * np.sum(theta ** 2))


def stage_loss_grad(spec: LossSpec, x_next, u, u_prev=None, theta=None):
    """
    Partial derivatives (dJ/dx', dJ/du, dJ/dtheta) of stage_loss, with
    theta shaped as given.
    """
    x_next, u, u_prev, theta, err = _prepare(spec, x_next, u, u_prev, theta)
    w = spec.weights
    zeros_theta = np.zeros_like(theta)
    if spec.kind is LossKind.MSE_TO_TARGET:
        return 2.0 * err, np.zeros_like(u), zeros_theta
    if spec.kind is LossKind.ALGORITHM_ONE:
        return 2.0 * err, 2.0 * w[0] * u, zeros_theta
    du = u - u_prev
    if spec.kind is LossKind.BUILDING:
        return 2.0 * err, 2.0 * w[0] * u + 2.0 * w[1] * du, zeros_theta
    if spec.kind is LossKind.VEHICLE:
        dx = np.zeros_like(err)
        idx = list(_VEHICLE_TRACKED)
        dx[idx] = 2.0 * err[idx]
        du_grad = 2.0 * np.array([w[0] * u[0] + w[2] * du[0], w[1] * u[1] + w[3] * du[1]])
        return dx, du_grad, zeros_theta
    return 2.0 * w[0] * err, 2.0 * w[1] * u, 2.0 * w[2] * theta
