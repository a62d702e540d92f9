"""
Parameter-shift gradients checked against central finite differences on
random circuit instances.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .circuits import (
    AnsatzSpec,
    ControlHead,
    EncoderKind,
    EncoderSpec,
    Entanglement,
    ParamTensor,
    compute_loss_gradient,
    evaluate_controls,
    parameter_shift_jacobian,
)
from .control import clip_controls
from .errors import PreconditionError
from .losses import LossKind, LossSpec, stage_loss
from .plants import PendulumPlant, TargetTrackPlant

log = logging.getLogger(__name__)

FD_STEP = 1e-5
JACOBIAN_TOLERANCE = 1e-6
LOSS_GRADIENT_TOLERANCE = 1e-4
# errors on entries smaller than this count as absolute
ERROR_FLOOR = 1e-2
MAX_CHECK_QUBITS = 5


def relative_error(estimate, reference, floor: float = ERROR_FLOOR) -> float:
    estimate = np.asarray(estimate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    scale = max(float(np.max(np.abs(reference))), floor)
    return float(np.max(np.abs(estimate - reference))) / scale


def finite_difference(fn, values, step: float = FD_STEP) -> np.ndarray:
    """
    Central differences of a vector- or scalar-valued fn over a flat vector.
    Columns follow the entries of `values`.
    """
    values = np.asarray(values, dtype=float)
    columns = []
    for j in range(values.size):
        shift = np.zeros_like(values)
        shift[j] = step
        columns.append((np.asarray(fn(values + shift)) - np.asarray(fn(values - shift))) / (2.0 * step))
    return np.stack(columns, axis=-1)


@dataclass
class GradCheckReport:
    qubits: int
    trials: int
    max_jacobian_error: float
    max_loss_gradient_error: Optional[float]

    @property
    def passed(self) -> bool:
        if self.max_jacobian_error >= JACOBIAN_TOLERANCE:
            return False
        return self.max_loss_gradient_error is None or self.max_loss_gradient_error < LOSS_GRADIENT_TOLERANCE

    def lines(self):
        yield "qubits: {}".format(self.qubits)
        yield "trials: {}".format(self.trials)
        yield "max jacobian relative error: {:.3e} (tolerance {:.0e})".format(
            self.max_jacobian_error, JACOBIAN_TOLERANCE)
        if self.max_loss_gradient_error is None:
            yield "loss gradient: skipped, needs at least 2 qubits"
        else:
            yield "max loss gradient relative error: {:.3e} (tolerance {:.0e})".format(
                self.max_loss_gradient_error, LOSS_GRADIENT_TOLERANCE)
        yield "result: {}".format("PASS" if self.passed else "FAIL")


def random_instance(qubits: int, rng: np.random.Generator, layers: int = 2):
    encoder = EncoderSpec(EncoderKind.ANGLE_RY, qubits, tuple(range(qubits)))
    entanglement = Entanglement.RING if rng.random() < 0.5 else Entanglement.LINEAR
    ansatz = AnsatzSpec(qubits, layers, entanglement)
    n_read = int(rng.integers(1, qubits + 1))
    wires = tuple(int(w) for w in rng.choice(qubits, size=n_read, replace=False))
    head = ControlHead.identity(wires)
    theta = ParamTensor(rng.uniform(-math.pi, math.pi, size=ansatz.shape))
    x = rng.uniform(-1.0, 1.0, size=qubits)
    return encoder, ansatz, head, theta, x


def jacobian_error(encoder, ansatz, head, theta, x) -> float:
    jac = parameter_shift_jacobian(encoder, ansatz, head, theta, x)

    def raw(values):
        return evaluate_controls(encoder, ansatz, head, ParamTensor(values.reshape(ansatz.shape)), x)[0]

    return relative_error(jac, finite_difference(raw, theta.flat))


def _loss_instance(qubits, rng, layers):
    """
    A plant-coupled instance whose controls stay strictly inside the bounds.
    """
    if qubits >= 3:
        plant = TargetTrackPlant()
        encoder = EncoderSpec(EncoderKind.ROTATION_TRIPLE, qubits, (0, 1, 2))
        head = ControlHead.identity((0, 1, 2))
    else:
        plant = PendulumPlant()
        encoder = EncoderSpec(EncoderKind.HADAMARD_RY, 2, (0, 1))
        head = ControlHead((1,), (2.0,), (0.0,))
    ansatz = AnsatzSpec(qubits, layers, Entanglement.LINEAR)
    theta = ParamTensor(rng.uniform(-math.pi, math.pi, size=ansatz.shape))
    x = rng.uniform(-1.0, 1.0, size=plant.state_dim)
    loss = LossSpec(LossKind.ALGORITHM_ONE, tuple(rng.uniform(-0.5, 0.5, size=plant.state_dim)),
                    (float(rng.uniform(0.0, 1.0)),))
    gains = np.abs(np.asarray(head.gains))
    u_min, u_max = -2.0 * gains, 2.0 * gains
    return plant, encoder, ansatz, head, theta, x, loss, u_min, u_max


def loss_gradient_error(plant, encoder, ansatz, head, theta, x, loss, u_min, u_max, u_prev=None) -> float:
    result = compute_loss_gradient(theta, x, plant, loss, encoder, ansatz, head, u_min, u_max, u_prev=u_prev)

    def composed(values):
        t = ParamTensor(values.reshape(ansatz.shape))
        _, physical = evaluate_controls(encoder, ansatz, head, t, x)
        u = clip_controls(physical, u_min, u_max)
        return stage_loss(loss, plant.step(x, u), u, u_prev, t.values)

    return relative_error(result.grad, finite_difference(composed, theta.flat))


def run_grad_check(qubits: int = 4, trials: int = 100, seed: int = 0, layers: int = 2) -> GradCheckReport:
    if not 1 <= qubits <= MAX_CHECK_QUBITS:
        raise PreconditionError("grad-check runs on 1..{} qubits, got {}".format(MAX_CHECK_QUBITS, qubits))
    if trials < 1:
        raise PreconditionError("grad-check needs at least one trial, got {}".format(trials))
    rng = np.random.default_rng(seed)
    worst_jac = 0.0
    worst_loss = None if qubits < 2 else 0.0
    for trial in range(trials):
        worst_jac = max(worst_jac, jacobian_error(*random_instance(qubits, rng, layers)))
        if worst_loss is not None:
            worst_loss = max(worst_loss, loss_gradient_error(*_loss_instance(qubits, rng, layers)))
        log.debug("trial %d: worst jacobian error %.3e", trial, worst_jac)
    report = GradCheckReport(qubits, trials, worst_jac, worst_loss)
    log.info("grad-check on %d qubit(s) over %d trial(s): %s", qubits, trials, "pass" if report.passed else "fail")
    return report
