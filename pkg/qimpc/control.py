"""
Actuation limits and shot-noise bounds shared by the control loop and its checks
"""
import math

import numpy as np

from .errors import ConfigurationError, PreconditionError


def check_bounds(u_min, u_max):
    u_min = np.asarray(u_min, dtype=float)
    u_max = np.asarray(u_max, dtype=float)
    if u_min.shape != u_max.shape:
        raise ConfigurationError("bounds have mismatched shapes {} and {}".format(u_min.shape, u_max.shape))
    if not np.all(u_min < u_max):
        raise ConfigurationError("every lower bound must be below its upper bound, got {} and {}".format(
            u_min.tolist(), u_max.tolist()))
    return u_min, u_max


def clip_controls(u, u_min, u_max) -> np.ndarray:
    """
    Project a control vector onto [u_min, u_max] componentwise.
    """
    u = np.asarray(u, dtype=float)
    u_min, u_max = check_bounds(u_min, u_max)
    if u.shape != u_min.shape:
        raise ConfigurationError("control of shape {} does not match bounds of shape {}".format(
            u.shape, u_min.shape))
    return np.maximum(u_min, np.minimum(u, u_max))


def pinned_mask(u, u_min, u_max) -> np.ndarray:
    """
    True where clipping moved the component onto a bound.
    """
    u = np.asarray(u, dtype=float)
    return (u < np.asarray(u_min, dtype=float)) | (u > np.asarray(u_max, dtype=float))


def count_bound_violations(controls, u_min, u_max) -> int:
    controls = np.atleast_2d(np.asarray(controls, dtype=float))
    if controls.size == 0:
        return 0
    outside = (controls < np.asarray(u_min, dtype=float)) | (controls > np.asarray(u_max, dtype=float))
    return int(np.count_nonzero(outside))


def hoeffding_shot_bound(epsilon: float, shots: int, outcome_range: float = 1.0) -> float:
    """
    Upper bound on P(|mean - E[mean]| >= epsilon) for `shots` independent
    outcomes spread over an interval of width `outcome_range`.

    The default width 1 applies to the frequency of +1 outcomes. A mean of
    +1/-1 Pauli-Z outcomes spans width 2.
    """
    if not epsilon > 0:
        raise PreconditionError("epsilon must be positive, got {}".format(epsilon))
    if shots < 1:
        raise PreconditionError("shots must be at least 1, got {}".format(shots))
    if not outcome_range > 0:
        raise PreconditionError("outcome range must be positive, got {}".format(outcome_range))
    return 2.0 * math.exp(-2.0 * epsilon ** 2 * shots / outcome_range ** 2)
