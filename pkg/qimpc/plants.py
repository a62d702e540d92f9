"""
Euler-discretized benchmark plants x' = f(x, u).

Units: angles in rad, rates in rad/s, temperatures in degrees C, positions
in m, velocities in m/s, forces in N, torques in N.m.
"""
import abc
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .circuits import ControlHead
from .errors import ConfigurationError, PlantSingularityError


def _check_positive(params, names):
    for name in names:
        value = getattr(params, name)
        if not value > 0:
            raise ConfigurationError("{} must be positive, got {}={}".format(
                type(params).__name__, name, value))


def wrap_angle(angle):
    """
    Map angles into [-pi, pi).
    """
    return (np.asarray(angle, dtype=float) + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class TargetTrackParams:
    alpha: float = 0.1

    def validate(self):
        if not 0 < self.alpha <= 1:
            raise ConfigurationError("alpha must lie in (0, 1], got {}".format(self.alpha))


@dataclass(frozen=True)
class BuildingParams:
    r: float = 0.5
    c: float = 1.0
    t_out: float = 15.0
    q_solar: float = 5.0
    q_occ: float = 3.0
    dt: float = 0.1
    t_comfort_min: float = 20.0
    t_comfort_max: float = 24.0

    def validate(self):
        _check_positive(self, ("r", "c", "dt"))
        if not self.t_comfort_min < self.t_comfort_max:
            raise ConfigurationError("comfort band needs t_comfort_min < t_comfort_max, got {} and {}".format(
                self.t_comfort_min, self.t_comfort_max))


@dataclass(frozen=True)
class VehicleParams:
    m: float = 1500.0
    wheelbase: float = 2.5
    c_d: float = 0.3
    rho: float = 1.225
    area: float = 2.5
    c_r: float = 0.01
    g: float = 9.81
    kappa: float = 0.0
    dt: float = 0.1

    def validate(self):
        _check_positive(self, ("m", "wheelbase", "dt"))


@dataclass(frozen=True)
class PendulumParams:
    m: float = 1.0
    length: float = 1.0
    g: float = 9.81
    dt: float = 0.05

    def validate(self):
        _check_positive(self, ("m", "length", "dt"))


@dataclass(frozen=True)
class DoublePendulumParams:
    m1: float = 1.0
    m2: float = 1.0
    l1: float = 1.0
    l2: float = 1.0
    g: float = 9.81
    dt: float = 0.05

    def validate(self):
        _check_positive(self, ("m1", "m2", "l1", "l2", "dt"))


def target_track_step(x, u, alpha: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x + alpha * (np.asarray(u, dtype=float) - x)


def building_step(x, u, p: BuildingParams) -> np.ndarray:
    """
    Thermal RC update for independent identical rooms, one heater power per room.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    flux = (p.t_out - x) / (p.r * p.c) + u / p.c + (p.q_solar + p.q_occ) / p.c
    return x + flux * p.dt


def vehicle_step(x, u, p: VehicleParams) -> np.ndarray:
    """
    State (s, v, y, heading), controls (traction force, steering angle).
    Drag and rolling resistance oppose the direction of motion.
    """
    s, v, y, heading = (float(a) for a in x)
    traction, steer = (float(a) for a in u)
    if abs(steer) >= math.pi / 2:
        raise PlantSingularityError("steering angle {} reaches the tan singularity at +/-pi/2".format(steer))
    drag = 0.5 * p.c_d * p.rho * p.area * v ** 2
    rolling = p.c_r * p.m * p.g
    resist = float(np.sign(v)) * (drag + rolling)
    return np.array([
        s + v * math.cos(heading) * p.dt,
        v + (traction - resist) / p.m * p.dt,
        y + v * math.sin(heading) * p.dt,
        heading + (v * math.tan(steer) / p.wheelbase - p.kappa * v) * p.dt,
    ])


def pendulum_step(x, u, p: PendulumParams) -> np.ndarray:
    theta, omega = (float(a) for a in x)
    torque = float(np.asarray(u, dtype=float).reshape(-1)[0])
    accel = -p.g / p.length * math.sin(theta) + torque / (p.m * p.length ** 2)
    return np.array([theta + omega * p.dt, omega + accel * p.dt])


def dp_mass_matrix(theta: float, phi: float, p: DoublePendulumParams) -> np.ndarray:
    coupling = p.m2 * p.l1 * p.l2 * math.cos(theta - phi)
    return np.array([
        [(p.m1 + p.m2) * p.l1 ** 2, coupling],
        [coupling, p.m2 * p.l2 ** 2],
    ])


def dp_coriolis(x, p: DoublePendulumParams) -> np.ndarray:
    theta, theta_dot, phi, phi_dot = (float(a) for a in x)
    s = math.sin(theta - phi)
    return np.array([
        p.m2 * p.l1 * p.l2 * s * phi_dot ** 2 + (p.m1 + p.m2) * p.g * p.l1 * math.sin(theta),
        -p.m2 * p.l1 * p.l2 * s * theta_dot ** 2 + p.m2 * p.g * p.l2 * math.sin(phi),
    ])


def dp_accelerations(x, tau, p: DoublePendulumParams) -> np.ndarray:
    """
    Solve M a = tau - C by Cramer's rule. det M = m2 l1^2 l2^2 (m1 + m2 sin^2(theta - phi)) > 0.
    """
    x = np.asarray(x, dtype=float)
    (a, b), (_, d) = dp_mass_matrix(x[0], x[2], p)
    r0, r1 = np.asarray(tau, dtype=float) - dp_coriolis(x, p)
    det = a * d - b * b
    return np.array([(r0 * d - b * r1) / det, (a * r1 - b * r0) / det])


def double_pendulum_step(x, tau, p: DoublePendulumParams) -> np.ndarray:
    theta, theta_dot, phi, phi_dot = (float(v) for v in x)
    acc = dp_accelerations(x, tau, p)
    return np.array([
        theta + theta_dot * p.dt,
        theta_dot + acc[0] * p.dt,
        phi + phi_dot * p.dt,
        phi_dot + acc[1] * p.dt,
    ])


class Plant(abc.ABC):
    """
    Discrete-time system with fixed state and control dimensions.
    """

    name = None
    state_labels: Tuple[str, ...] = ()
    control_labels: Tuple[str, ...] = ()

    def __init__(self, params):
        params.validate()
        self.params = params

    @property
    def state_dim(self) -> int:
        return len(self.state_labels)

    @property
    def control_dim(self) -> int:
        return len(self.control_labels)

    @abc.abstractmethod
    def _step(self, x, u) -> np.ndarray:
        pass

    def step(self, x, u) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if x.shape != (self.state_dim,):
            raise ConfigurationError("{} takes a state of length {}, got shape {}".format(
                self.name, self.state_dim, x.shape))
        if u.shape != (self.control_dim,):
            raise ConfigurationError("{} takes {} control(s), got shape {}".format(
                self.name, self.control_dim, u.shape))
        return self._step(x, u)

    @abc.abstractmethod
    def default_head(self) -> ControlHead:
        pass

    @abc.abstractmethod
    def default_bounds(self):
        pass


class TargetTrackPlant(Plant):
    name = "target-tracking"
    state_labels = ("x_1", "x_2", "x_3")
    control_labels = ("u_1", "u_2", "u_3")

    def __init__(self, params: TargetTrackParams = TargetTrackParams()):
        super(TargetTrackPlant, self).__init__(params)

    def _step(self, x, u):
        return target_track_step(x, u, self.params.alpha)

    def default_head(self):
        return ControlHead.identity((0, 1, 2))

    def default_bounds(self):
        return np.full(3, -1.0), np.full(3, 1.0)


class BuildingPlant(Plant):
    name = "building"

    def __init__(self, params: BuildingParams = BuildingParams(), n_rooms: int = 3):
        if n_rooms < 1:
            raise ConfigurationError("building needs at least one room, got {}".format(n_rooms))
        super(BuildingPlant, self).__init__(params)
        self.n_rooms = n_rooms
        self.state_labels = tuple("T_room_{}".format(i + 1) for i in range(n_rooms))
        self.control_labels = tuple("P_hvac_{}".format(i + 1) for i in range(n_rooms))

    def _step(self, x, u):
        return building_step(x, u, self.params)

    def default_head(self):
        return ControlHead.from_range(range(self.n_rooms), [0.0] * self.n_rooms, [10.0] * self.n_rooms)

    def default_bounds(self):
        return np.zeros(self.n_rooms), np.full(self.n_rooms, 10.0)


def comfort_violations(building: BuildingPlant, states) -> int:
    """
    Number of (step, room) temperatures outside the comfort band.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if states.size == 0:
        return 0
    p = building.params
    return int(np.count_nonzero((states < p.t_comfort_min) | (states > p.t_comfort_max)))


class VehiclePlant(Plant):
    name = "vehicle"
    state_labels = ("s", "v", "y", "heading")
    control_labels = ("traction", "steer")

    def __init__(self, params: VehicleParams = VehicleParams()):
        super(VehiclePlant, self).__init__(params)

    def _step(self, x, u):
        return vehicle_step(x, u, self.params)

    def default_head(self):
        return ControlHead((0, 1), (1500.0, 0.5), (0.0, 0.0))

    def default_bounds(self):
        return np.array([-1500.0, -0.5]), np.array([1500.0, 0.5])


class PendulumPlant(Plant):
    name = "pendulum"
    state_labels = ("theta", "theta_dot")
    control_labels = ("torque",)

    def __init__(self, params: PendulumParams = PendulumParams(), wrap_angles: bool = False):
        super(PendulumPlant, self).__init__(params)
        self.wrap_angles = wrap_angles

    def _step(self, x, u):
        x_next = pendulum_step(x, u, self.params)
        if self.wrap_angles:
            x_next[0] = wrap_angle(x_next[0])
        return x_next

    def default_head(self):
        return ControlHead((1,), (2.0,), (0.0,))

    def default_bounds(self):
        return np.array([-2.0]), np.array([2.0])


class DoublePendulumPlant(Plant):
    name = "double-pendulum"
    state_labels = ("theta", "theta_dot", "phi", "phi_dot")
    control_labels = ("tau_1", "tau_2")

    def __init__(self, params: DoublePendulumParams = DoublePendulumParams(), wrap_angles: bool = False):
        super(DoublePendulumPlant, self).__init__(params)
        self.wrap_angles = wrap_angles

    def _step(self, x, u):
        x_next = double_pendulum_step(x, u, self.params)
        if self.wrap_angles:
            x_next[[0, 2]] = wrap_angle(x_next[[0, 2]])
        return x_next

    def default_head(self):
        return ControlHead.identity((0, 1))

    def default_bounds(self):
        return np.full(2, -1.0), np.full(2, 1.0)
