"""
Encoder and ansatz circuits, control readout and parameter-shift gradients.

Parameters are flattened in C order over (layer, qubit, axis), so column j of
a jacobian belongs to theta.values.reshape(-1)[j].
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from .control import clip_controls, pinned_mask
from .errors import ConfigurationError, NumericalError, UnsupportedModeError
from .losses import stage_loss, stage_loss_grad
from .quantum import (
    MAX_QUBITS,
    Circuit,
    cnot,
    expectation_z,
    hadamard,
    rot,
    run_circuit,
    rx,
    ry,
    rz,
    sample_expectation_z,
)

log = logging.getLogger(__name__)

SHIFT = math.pi / 2
PLANT_FD_STEP = 1e-6


class EncoderKind(Enum):
    ROTATION_TRIPLE = "rotation-triple"
    HADAMARD_RY = "hadamard-ry"
    ANGLE_RY = "angle-ry"


class Entanglement(Enum):
    LINEAR = "linear"
    RING = "ring"


class RotConvention(Enum):
    ZYZ = "zyz"
    ZYX = "zyx"


@dataclass(frozen=True)
class EncoderSpec:
    kind: EncoderKind
    n_qubits: int
    feature_wires: Tuple[int, ...]
    offsets: Optional[Tuple[float, ...]] = None
    scales: Optional[Tuple[float, ...]] = None

    def validate(self, n_features: Optional[int] = None) -> None:
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigurationError("encoder qubit count must be within 1..{}, got {}".format(
                MAX_QUBITS, self.n_qubits))
        if len(self.feature_wires) > self.n_qubits:
            raise ConfigurationError("{} features do not fit on {} qubits".format(
                len(self.feature_wires), self.n_qubits))
        if len(set(self.feature_wires)) != len(self.feature_wires):
            raise ConfigurationError("feature wires must be distinct, got {}".format(list(self.feature_wires)))
        for w in self.feature_wires:
            if not 0 <= w < self.n_qubits:
                raise ConfigurationError("feature wire {} out of range for {} qubits".format(w, self.n_qubits))
        for name in ("offsets", "scales"):
            values = getattr(self, name)
            if values is not None and len(values) != len(self.feature_wires):
                raise ConfigurationError("encoder {} has {} entries for {} features".format(
                    name, len(values), len(self.feature_wires)))
        if n_features is not None and n_features != len(self.feature_wires):
            raise ConfigurationError("state has {} features but the encoder maps {}".format(
                n_features, len(self.feature_wires)))

    def features(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.offsets is not None:
            x = x - np.asarray(self.offsets, dtype=float)
        if self.scales is not None:
            x = x * np.asarray(self.scales, dtype=float)
        return x


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    n_layers: int = 2
    entanglement: Entanglement = Entanglement.LINEAR
    rot_convention: RotConvention = RotConvention.ZYZ

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.n_layers, self.n_qubits, 3)

    @property
    def n_params(self) -> int:
        return self.n_layers * self.n_qubits * 3

    def validate(self) -> None:
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigurationError("ansatz qubit count must be within 1..{}, got {}".format(
                MAX_QUBITS, self.n_qubits))
        if self.n_layers < 1:
            raise ConfigurationError("ansatz needs at least one layer, got {}".format(self.n_layers))

    def entangling_pairs(self):
        pairs = [(q, q + 1) for q in range(self.n_qubits - 1)]
        if self.entanglement is Entanglement.RING and self.n_qubits > 1:
            pairs.append((self.n_qubits - 1, 0))
        return pairs


@dataclass
class ParamTensor:
    values: np.ndarray

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        if self.values.ndim != 3 or self.values.shape[2] != 3:
            raise ConfigurationError("parameters must have shape (layers, qubits, 3), got {}".format(
                self.values.shape))
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("parameters contain non-finite entries")

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def check(self, spec: AnsatzSpec) -> None:
        if self.values.shape != spec.shape:
            raise ConfigurationError("parameters of shape {} do not match ansatz shape {}".format(
                self.values.shape, spec.shape))


def init_params(spec: AnsatzSpec, seed: int, scale: float = 0.1) -> ParamTensor:
    rng = np.random.default_rng(seed)
    return ParamTensor(rng.uniform(-scale, scale, size=spec.shape))


@dataclass(frozen=True)
class ControlHead:
    readout_wires: Tuple[int, ...]
    gains: Tuple[float, ...]
    offsets: Tuple[float, ...]

    @classmethod
    def identity(cls, readout_wires: Sequence[int]) -> "ControlHead":
        m = len(readout_wires)
        return cls(tuple(readout_wires), (1.0,) * m, (0.0,) * m)

    @classmethod
    def from_range(cls, readout_wires: Sequence[int], low: Sequence[float], high: Sequence[float]):
        """
        Affine map sending raw -1 to `low` and raw +1 to `high`.
        """
        low = np.asarray(low, dtype=float)
        high = np.asarray(high, dtype=float)
        gains = (high - low) / 2.0
        offsets = (high + low) / 2.0
        return cls(tuple(readout_wires), tuple(float(g) for g in gains), tuple(float(o) for o in offsets))

    @property
    def dim(self) -> int:
        return len(self.readout_wires)

    def validate(self, n_qubits: int, control_dim: Optional[int] = None) -> None:
        if not (len(self.readout_wires) == len(self.gains) == len(self.offsets)):
            raise ConfigurationError("control head needs one gain and one offset per readout wire")
        for w in self.readout_wires:
            if not 0 <= w < n_qubits:
                raise ConfigurationError("readout wire {} out of range for {} qubits".format(w, n_qubits))
        if any(g == 0 for g in self.gains):
            raise ConfigurationError("control head gains must be non-zero, got {}".format(list(self.gains)))
        if control_dim is not None and control_dim != self.dim:
            raise ConfigurationError("plant takes {} controls but the head reads {} wires".format(
                control_dim, self.dim))

    def to_physical(self, raw) -> np.ndarray:
        return np.asarray(self.gains) * np.asarray(raw, dtype=float) + np.asarray(self.offsets)


def build_encoder(spec: EncoderSpec, x) -> Circuit:
    x = np.asarray(x, dtype=float)
    spec.validate(n_features=x.shape[0])
    if not np.all(np.isfinite(x)):
        raise NumericalError("cannot encode non-finite state {}".format(x.tolist()))
    features = spec.features(x)
    ops = []
    if spec.kind is EncoderKind.HADAMARD_RY:
        ops.extend(hadamard(w) for w in spec.feature_wires)
        ops.extend(ry(w, f) for w, f in zip(spec.feature_wires, features))
    elif spec.kind is EncoderKind.ANGLE_RY:
        ops.extend(ry(w, f) for w, f in zip(spec.feature_wires, features))
    else:
        for w, f in zip(spec.feature_wires, features):
            ops.append(ry(w, math.pi * f))
            ops.append(rx(w, math.pi * (f + 0.5)))
            ops.append(rz(w, math.pi * f / 2.0))
    return Circuit(spec.n_qubits, ops)


def _ansatz_ops(spec: AnsatzSpec, values: np.ndarray):
    zyx = spec.rot_convention is RotConvention.ZYX
    pairs = spec.entangling_pairs()
    ops = []
    for layer in range(spec.n_layers):
        for q in range(spec.n_qubits):
            ops.append(rot(q, *values[layer, q], zyx=zyx))
        ops.extend(cnot(c, t) for c, t in pairs)
    return ops


def build_ansatz(spec: AnsatzSpec, theta: ParamTensor) -> Circuit:
    spec.validate()
    theta.check(spec)
    return Circuit(spec.n_qubits, _ansatz_ops(spec, theta.values))


def _check_circuit_args(encoder, ansatz, head, theta, x):
    ansatz.validate()
    theta.check(ansatz)
    encoder.validate(n_features=np.asarray(x).shape[0])
    if encoder.n_qubits != ansatz.n_qubits:
        raise ConfigurationError("encoder has {} qubits but the ansatz has {}".format(
            encoder.n_qubits, ansatz.n_qubits))
    head.validate(ansatz.n_qubits)


def encode_state(encoder: EncoderSpec, x):
    return run_circuit(build_encoder(encoder, x))


def _readout(ansatz, values, encoded, wires):
    state = run_circuit(Circuit(ansatz.n_qubits, _ansatz_ops(ansatz, values)), encoded)
    return np.array([expectation_z(state, w) for w in wires])


def evaluate_controls(encoder: EncoderSpec, ansatz: AnsatzSpec, head: ControlHead, theta: ParamTensor, x,
                      shots: Optional[int] = None, seed: int = 0):
    """
    Run encoder and ansatz on state x and read one Pauli-Z expectation per
    readout wire. Returns (raw, physical).
    """
    _check_circuit_args(encoder, ansatz, head, theta, x)
    state = run_circuit(build_ansatz(ansatz, theta), encode_state(encoder, x))
    if shots is None:
        raw = np.array([expectation_z(state, w) for w in head.readout_wires])
    else:
        wire_seeds = np.random.SeedSequence(seed).generate_state(head.dim)
        raw = np.array([sample_expectation_z(state, w, shots, int(s))
                        for w, s in zip(head.readout_wires, wire_seeds)])
    return raw, head.to_physical(raw)


def influence_mask(ansatz: AnsatzSpec, readout_wires: Sequence[int]) -> np.ndarray:
    """
    Boolean array shaped like the parameters: False where a parameter has no
    gate path to any readout wire.
    """
    pairs = ansatz.entangling_pairs()
    targets = set(readout_wires)
    mask = np.zeros(ansatz.shape, dtype=bool)
    for layer in range(ansatz.n_layers):
        for q in range(ansatz.n_qubits):
            cone = {q}
            for _ in range(layer, ansatz.n_layers):
                for c, t in pairs:
                    if c in cone or t in cone:
                        cone.update((c, t))
            mask[layer, q, :] = bool(cone & targets)
    return mask


def parameter_shift_jacobian(encoder: EncoderSpec, ansatz: AnsatzSpec, head: ControlHead, theta: ParamTensor, x,
                             shots: Optional[int] = None, workers: int = 1) -> np.ndarray:
    """
    d raw_i / d theta_j from two shifted evaluations per parameter.
    Every trainable angle drives a single Pauli rotation, so the shift
    rule with s = pi/2 is exact on expectations.
    """
    if shots is not None:
        raise UnsupportedModeError("the parameter-shift jacobian needs exact expectations, shots={}".format(shots))
    _check_circuit_args(encoder, ansatz, head, theta, x)
    encoded = encode_state(encoder, x)
    base = theta.flat
    influenced = influence_mask(ansatz, head.readout_wires).reshape(-1)
    columns = [j for j in range(base.size) if influenced[j]]

    def shifted(task):
        j, sign = task
        values = base.copy()
        values[j] += sign * SHIFT
        return _readout(ansatz, values.reshape(ansatz.shape), encoded, head.readout_wires)

    tasks = [(j, sign) for j in columns for sign in (1.0, -1.0)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(shifted, tasks))
    else:
        results = [shifted(t) for t in tasks]

    jac = np.zeros((head.dim, base.size))
    for i, j in enumerate(columns):
        jac[:, j] = (results[2 * i] - results[2 * i + 1]) / 2.0
    return jac


def plant_control_jacobian(plant, x, u, step: float = PLANT_FD_STEP) -> np.ndarray:
    """
    Central finite difference d f(x, u) / d u, shaped (state_dim, control_dim).
    """
    u = np.asarray(u, dtype=float)
    columns = []
    for j in range(u.size):
        du = np.zeros_like(u)
        du[j] = step
        columns.append((plant.step(x, u + du) - plant.step(x, u - du)) / (2.0 * step))
    return np.stack(columns, axis=1)


@dataclass
class GradientResult:
    grad: np.ndarray
    raw: np.ndarray
    physical: np.ndarray
    clipped: np.ndarray
    x_next: np.ndarray
    loss: float


def _require_finite(name, value, **context):
    if not np.all(np.isfinite(value)):
        details = ", ".join("{}={}".format(k, np.asarray(v).tolist()) for k, v in sorted(context.items()))
        raise NumericalError("non-finite {} ({})".format(name, details))


def compute_loss_gradient(theta: ParamTensor, x, plant, loss, encoder: EncoderSpec, ansatz: AnsatzSpec,
                          head: ControlHead, u_min, u_max, u_prev=None, workers: int = 1) -> GradientResult:
    """
    Chain rule through readout, head, clip and plant for one stage loss:
    dJ/dtheta = (dJ/dx' . df/du + dJ/du) . mask . gain . d raw/d theta + dJ/dtheta
    where mask zeroes the components pinned at a bound.
    """
    x = np.asarray(x, dtype=float)
    head.validate(ansatz.n_qubits, control_dim=plant.control_dim)
    if u_prev is None:
        u_prev = np.zeros(head.dim)
    raw, physical = evaluate_controls(encoder, ansatz, head, theta, x)
    clipped = clip_controls(physical, u_min, u_max)
    x_next = plant.step(x, clipped)
    _require_finite("next state", x_next, x=x, u=clipped)
    value = stage_loss(loss, x_next, clipped, u_prev, theta.values)
    _require_finite("stage loss", value, x=x, u=clipped, x_next=x_next)

    dfdu = plant_control_jacobian(plant, x, clipped)
    _require_finite("plant jacobian", dfdu, x=x, u=clipped)
    dj_dx, dj_du, dj_dtheta = stage_loss_grad(loss, x_next, clipped, u_prev, theta.values)
    dj_dclipped = dj_dx @ dfdu + dj_du
    free = ~pinned_mask(physical, u_min, u_max)
    dj_draw = dj_dclipped * free * np.asarray(head.gains)

    jac = parameter_shift_jacobian(encoder, ansatz, head, theta, x, workers=workers)
    grad = dj_draw @ jac + dj_dtheta.reshape(-1)
    _require_finite("gradient", grad, x=x, u=clipped, loss=value)
    return GradientResult(grad, raw, physical, clipped, x_next, float(value))


def loss_gradient(theta: ParamTensor, x, plant, loss, encoder: EncoderSpec, ansatz: AnsatzSpec, head: ControlHead,
                  u_min, u_max, u_prev=None, workers: int = 1) -> np.ndarray:
    return compute_loss_gradient(theta, x, plant, loss, encoder, ansatz, head, u_min, u_max,
                                 u_prev=u_prev, workers=workers).grad
