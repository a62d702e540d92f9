"""
Dense statevector simulation of small registers.

Qubit 0 is the most significant bit of a basis index: on 3 qubits the
amplitude of |q0 q1 q2> = |100> sits at index 4. Every function here keeps
that convention, circuits read top-down like their diagrams.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from typing import List, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, OracleSizeError, PreconditionError

MAX_QUBITS = 12
ORACLE_MAX_QUBITS = 6

_I2 = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
_P0 = np.array([[1, 0], [0, 0]], dtype=np.complex128)
_P1 = np.array([[0, 0], [0, 1]], dtype=np.complex128)


class GateKind(Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    ROT = "Rot"
    # operator product RZ(a)·RY(b)·RX(c)
    ROT_ZYX = "RotZYX"
    H = "H"
    CNOT = "CNOT"


_ANGLE_COUNT = {
    GateKind.RX: 1,
    GateKind.RY: 1,
    GateKind.RZ: 1,
    GateKind.ROT: 3,
    GateKind.ROT_ZYX: 3,
    GateKind.H: 0,
    GateKind.CNOT: 0,
}


def rx_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz_matrix(theta: float) -> np.ndarray:
    phase = np.exp(-0.5j * theta)
    return np.array([[phase, 0], [0, np.conj(phase)]], dtype=np.complex128)


def rot_matrix(phi1: float, phi2: float, phi3: float) -> np.ndarray:
    """
    RZ(phi1) applied first, then RY(phi2), then RZ(phi3).
    """
    return rz_matrix(phi3) @ ry_matrix(phi2) @ rz_matrix(phi1)


def rot_zyx_matrix(phi1: float, phi2: float, phi3: float) -> np.ndarray:
    return rz_matrix(phi1) @ ry_matrix(phi2) @ rx_matrix(phi3)


@dataclass(frozen=True)
class GateOp:
    kind: GateKind
    wires: Tuple[int, ...]
    angles: Tuple[float, ...] = ()

    def validate(self, n_qubits: int) -> None:
        expected_wires = 2 if self.kind is GateKind.CNOT else 1
        if len(self.wires) != expected_wires:
            raise PreconditionError("{} expects {} wire(s), got {}".format(
                self.kind.value, expected_wires, self.wires))
        if len(self.angles) != _ANGLE_COUNT[self.kind]:
            raise PreconditionError("{} expects {} angle(s), got {}".format(
                self.kind.value, _ANGLE_COUNT[self.kind], len(self.angles)))
        for w in self.wires:
            if not 0 <= w < n_qubits:
                raise PreconditionError("wire {} out of range for a {}-qubit register".format(w, n_qubits))
        if self.kind is GateKind.CNOT and self.wires[0] == self.wires[1]:
            raise PreconditionError("CNOT control and target must differ, got {}".format(self.wires))

    def matrix(self) -> np.ndarray:
        """
        2x2 unitary of a single-qubit gate. CNOT has no 2x2 form.
        """
        if self.kind is GateKind.RX:
            return rx_matrix(self.angles[0])
        if self.kind is GateKind.RY:
            return ry_matrix(self.angles[0])
        if self.kind is GateKind.RZ:
            return rz_matrix(self.angles[0])
        if self.kind is GateKind.ROT:
            return rot_matrix(*self.angles)
        if self.kind is GateKind.ROT_ZYX:
            return rot_zyx_matrix(*self.angles)
        if self.kind is GateKind.H:
            return _H
        raise PreconditionError("{} is not a single-qubit gate".format(self.kind.value))


def rx(wire, theta):
    return GateOp(GateKind.RX, (wire,), (float(theta),))


def ry(wire, theta):
    return GateOp(GateKind.RY, (wire,), (float(theta),))


def rz(wire, theta):
    return GateOp(GateKind.RZ, (wire,), (float(theta),))


def rot(wire, phi1, phi2, phi3, zyx=False):
    kind = GateKind.ROT_ZYX if zyx else GateKind.ROT
    return GateOp(kind, (wire,), (float(phi1), float(phi2), float(phi3)))


def hadamard(wire):
    return GateOp(GateKind.H, (wire,))


def cnot(control, target):
    return GateOp(GateKind.CNOT, (control, target))


def _check_register_size(n_qubits):
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError("qubit count must be within 1..{}, got {}".format(MAX_QUBITS, n_qubits))


@dataclass
class Circuit:
    n_qubits: int
    ops: List[GateOp] = field(default_factory=list)

    def validate(self) -> None:
        _check_register_size(self.n_qubits)
        for op in self.ops:
            op.validate(self.n_qubits)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ConfigurationError("cannot join a {}-qubit circuit with a {}-qubit one".format(
                self.n_qubits, other.n_qubits))
        return Circuit(self.n_qubits, list(self.ops) + list(other.ops))

    def __len__(self):
        return len(self.ops)


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def new_zero_state(n_qubits: int) -> StateVector:
    _check_register_size(n_qubits)
    amplitudes = np.zeros(2 ** n_qubits, dtype=np.complex128)
    amplitudes[0] = 1.0
    return StateVector(int(n_qubits), amplitudes)


def basis_state(n_qubits: int, index: int) -> StateVector:
    _check_register_size(n_qubits)
    if not 0 <= index < 2 ** n_qubits:
        raise PreconditionError("basis index {} out of range for {} qubits".format(index, n_qubits))
    amplitudes = np.zeros(2 ** n_qubits, dtype=np.complex128)
    amplitudes[index] = 1.0
    return StateVector(int(n_qubits), amplitudes)


def _apply_single(amplitudes, matrix, wire, n):
    psi = amplitudes.reshape((2,) * n)
    psi = np.tensordot(matrix, psi, axes=([1], [wire]))
    return np.moveaxis(psi, 0, wire).reshape(-1)


def _apply_cnot(amplitudes, control, target, n):
    psi = amplitudes.reshape((2,) * n).copy()
    sel = [slice(None)] * n
    sel[control] = 1
    sel = tuple(sel)
    # the control axis disappears from the slice
    axis = target - 1 if target > control else target
    psi[sel] = np.flip(psi[sel], axis=axis).copy()
    return psi.reshape(-1)


def apply_gate(state: StateVector, op: GateOp) -> StateVector:
    op.validate(state.n_qubits)
    if op.kind is GateKind.CNOT:
        amplitudes = _apply_cnot(state.amplitudes, op.wires[0], op.wires[1], state.n_qubits)
    else:
        amplitudes = _apply_single(state.amplitudes, op.matrix(), op.wires[0], state.n_qubits)
    return StateVector(state.n_qubits, amplitudes)


def run_circuit(circuit: Circuit, state: StateVector = None) -> StateVector:
    """
    Apply every op of `circuit` in order, starting from |0...0> unless a
    state is given.
    """
    if state is None:
        state = new_zero_state(circuit.n_qubits)
    elif state.n_qubits != circuit.n_qubits:
        raise ConfigurationError("circuit has {} qubits but the state has {}".format(
            circuit.n_qubits, state.n_qubits))
    for op in circuit.ops:
        state = apply_gate(state, op)
    return state


def _check_wire(state, wire):
    if not 0 <= wire < state.n_qubits:
        raise PreconditionError("wire {} out of range for a {}-qubit register".format(wire, state.n_qubits))


def expectation_z(state: StateVector, wire: int) -> float:
    _check_wire(state, wire)
    n = state.n_qubits
    probs = state.probabilities().reshape((2,) * n)
    others = tuple(a for a in range(n) if a != wire)
    marginal = probs.sum(axis=others) if others else probs
    return float(np.clip(marginal[0] - marginal[1], -1.0, 1.0))


def sample_from_expectation(z: float, shots: int, rng: np.random.Generator) -> float:
    """
    Mean of `shots` independent +1/-1 outcomes with P(+1) = (1 + z) / 2.
    """
    if shots < 1:
        raise PreconditionError("shots must be at least 1, got {}".format(shots))
    p_plus = min(1.0, max(0.0, (1.0 + z) / 2.0))
    n_plus = int(rng.binomial(int(shots), p_plus))
    return (2.0 * n_plus - shots) / shots


def sample_expectation_z(state: StateVector, wire: int, shots: int, rng_seed: int) -> float:
    if shots < 1:
        raise PreconditionError("shots must be at least 1, got {}".format(shots))
    z = expectation_z(state, wire)
    return sample_from_expectation(z, shots, np.random.default_rng(rng_seed))


def _embed(n, factors):
    """
    Kronecker product over all wires, `factors` maps wire -> 2x2 matrix.
    """
    return reduce(np.kron, [factors.get(w, _I2) for w in range(n)])


def gate_unitary(op: GateOp, n_qubits: int) -> np.ndarray:
    op.validate(n_qubits)
    if op.kind is GateKind.CNOT:
        control, target = op.wires
        return _embed(n_qubits, {control: _P0}) + _embed(n_qubits, {control: _P1, target: _X})
    return _embed(n_qubits, {op.wires[0]: op.matrix()})


def dense_unitary_oracle(circuit: Circuit) -> np.ndarray:
    """
    Explicit 2^n x 2^n unitary of a circuit. Only meant to cross-check
    apply_gate in tests and diagnostics.
    """
    if circuit.n_qubits > ORACLE_MAX_QUBITS:
        raise OracleSizeError("dense oracle is limited to {} qubits, got {}".format(
            ORACLE_MAX_QUBITS, circuit.n_qubits))
    circuit.validate()
    dim = 2 ** circuit.n_qubits
    unitary = np.eye(dim, dtype=np.complex128)
    for op in circuit.ops:
        unitary = gate_unitary(op, circuit.n_qubits) @ unitary
    return unitary


def random_circuit(n_qubits: int, n_gates: int, rng: np.random.Generator,
                   kinds: Sequence[GateKind] = None) -> Circuit:
    """
    Circuit of uniformly drawn gates and angles, for fuzzing and diagnostics.
    """
    if kinds is None:
        kinds = [k for k in GateKind if n_qubits > 1 or k is not GateKind.CNOT]
    ops = []
    for _ in range(n_gates):
        kind = kinds[rng.integers(len(kinds))]
        if kind is GateKind.CNOT:
            control, target = rng.choice(n_qubits, size=2, replace=False)
            ops.append(cnot(int(control), int(target)))
            continue
        angles = tuple(float(a) for a in rng.uniform(-math.pi, math.pi, size=_ANGLE_COUNT[kind]))
        ops.append(GateOp(kind, (int(rng.integers(n_qubits)),), angles))
    return Circuit(n_qubits, ops)
