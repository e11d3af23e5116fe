"""Dense statevector simulation of the three ansatz circuit families.

Circuits act on 2^n complex amplitudes with qubit 0 as the most significant
basis-index bit.  Rotation gates are exp(-i theta G / 2) for G in {X, Y, Z},
so every trainable gate satisfies the two-point parameter-shift rule with
shift pi/2.  All evaluation paths run batched over parameter vectors; the
public single-circuit API is a batch of one.

Parameter layout: within each layer the rotation blocks appear in circuit
order and each block holds one angle per qubit, so e.g. a single-layer
two-qubit ManyBody circuit reads params as [RY q0, RY q1, RZ q0, RZ q1].
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DivergenceError, NumericalError, ShapeError, ValidityError
from .pauli import SparseHermitian


class AnsatzFamily(str, enum.Enum):
    MANY_BODY = "many_body"      # per layer: RY, RZ on each qubit + CNOT ring
    MOLECULAR = "molecular"      # per layer: RX, RY, RZ on each qubit + CNOT ring
    RANDOM = "random"            # per layer: RX,RY,RZ + CZ ring + RX,RY,RZ

    @property
    def params_per_qubit_per_layer(self) -> int:
        return {"many_body": 2, "molecular": 3, "random": 6}[self.value]


@dataclass(frozen=True)
class AnsatzSpec:
    family: AnsatzFamily
    n_qubits: int
    n_layers: int

    def __post_init__(self):
        if self.n_qubits < 1 or self.n_layers < 1:
            raise ValidityError("need at least one qubit and one layer")

    @property
    def params_per_qubit_per_layer(self) -> int:
        return self.family.params_per_qubit_per_layer

    @property
    def n_params(self) -> int:
        return self.n_layers * self.params_per_qubit_per_layer * self.n_qubits


class Scheduler(str, enum.Enum):
    CONSTANT = "constant"
    COSINE_ANNEALING = "cosine_annealing"


@dataclass(frozen=True)
class VqeConfig:
    learning_rate: float = 1e-3
    max_steps: int = 2000
    weight_decay: float = 0.0
    scheduler: Scheduler = Scheduler.CONSTANT
    convergence_rel_tol: float = 1e-5
    seed: int = 0
    early_stop: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidityError("learning rate must be positive")
        if self.max_steps < 1:
            raise ValidityError("max_steps must be at least 1")


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > 1e-10:
            raise ValidityError(f"state norm {norm} is not 1")

    @property
    def n_qubits(self) -> int:
        return int(np.log2(len(self.amplitudes)))


@dataclass(frozen=True)
class VqeTrace:
    loss_history: list[float]
    final_params: np.ndarray
    converged_step: int | None
    config: VqeConfig

    @property
    def initial_loss(self) -> float:
        return self.loss_history[0]

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "loss_history": self.loss_history,
                "final_params": self.final_params.tolist(),
                "converged_step": self.converged_step,
                "config": {
                    "learning_rate": self.config.learning_rate,
                    "max_steps": self.config.max_steps,
                    "weight_decay": self.config.weight_decay,
                    "scheduler": self.config.scheduler.value,
                    "convergence_rel_tol": self.config.convergence_rel_tol,
                    "early_stop": self.config.early_stop,
                },
                "seed": self.config.seed,
            }
        )


# --- gate kernels, batched over axis 0 ---------------------------------------


def _apply_rotation(states: np.ndarray, axis: str, qubit: int, theta: np.ndarray,
                    n: int) -> np.ndarray:
    b = states.shape[0]
    shaped = states.reshape(b, 1 << qubit, 2, 1 << (n - qubit - 1))
    a0 = shaped[:, :, 0, :]
    a1 = shaped[:, :, 1, :]
    out = np.empty_like(shaped)
    if axis == "z":
        phase = np.exp(-0.5j * theta)[:, None, None]
        out[:, :, 0, :] = phase * a0
        out[:, :, 1, :] = np.conj(phase) * a1
    else:
        c = np.cos(0.5 * theta)[:, None, None]
        s = np.sin(0.5 * theta)[:, None, None]
        if axis == "y":
            out[:, :, 0, :] = c * a0 - s * a1
            out[:, :, 1, :] = s * a0 + c * a1
        else:  # x
            out[:, :, 0, :] = c * a0 - 1j * s * a1
            out[:, :, 1, :] = -1j * s * a0 + c * a1
    return out.reshape(b, -1)


@lru_cache(maxsize=None)
def _cnot_permutation(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n)
    c_mask = 1 << (n - control - 1)
    t_mask = 1 << (n - target - 1)
    return np.where(idx & c_mask, idx ^ t_mask, idx)


@lru_cache(maxsize=None)
def _cz_signs(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n)
    c_mask = 1 << (n - control - 1)
    t_mask = 1 << (n - target - 1)
    both = ((idx & c_mask) != 0) & ((idx & t_mask) != 0)
    return np.where(both, -1.0, 1.0)


def _ring_pairs(n: int) -> list[tuple[int, int]]:
    # A 2-qubit ring would apply the same pair twice; one entangler suffices.
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    return [(i, (i + 1) % n) for i in range(n)]


@lru_cache(maxsize=None)
def _gate_sequence(spec: AnsatzSpec) -> tuple[tuple, ...]:
    """Flat gate list: ("rot", axis, qubit, param_index) and ("cnot"/"cz", c, t)."""
    n = spec.n_qubits
    gates: list[tuple] = []
    base = 0
    for _ in range(spec.n_layers):
        if spec.family is AnsatzFamily.MANY_BODY:
            blocks = [("y",), ("z",)]
        elif spec.family is AnsatzFamily.MOLECULAR:
            blocks = [("x",), ("y",), ("z",)]
        else:
            blocks = [("x",), ("y",), ("z",)]
        for b, (axis,) in enumerate(blocks):
            for q in range(n):
                gates.append(("rot", axis, q, base + b * n + q))
        entangler = "cz" if spec.family is AnsatzFamily.RANDOM else "cnot"
        for c, t in _ring_pairs(n):
            gates.append((entangler, c, t))
        if spec.family is AnsatzFamily.RANDOM:
            for b, axis in enumerate("xyz"):
                for q in range(n):
                    gates.append(("rot", axis, q, base + (3 + b) * n + q))
        base += spec.params_per_qubit_per_layer * n
    return tuple(gates)


def _run_circuit(spec: AnsatzSpec, params: np.ndarray) -> np.ndarray:
    """Evolve |0...0> under the ansatz for each parameter row."""
    if params.ndim != 2 or params.shape[1] != spec.n_params:
        raise ShapeError(
            f"expected parameter shape (batch, {spec.n_params}), got {params.shape}"
        )
    n = spec.n_qubits
    states = np.zeros((params.shape[0], 1 << n), dtype=complex)
    states[:, 0] = 1.0
    for gate in _gate_sequence(spec):
        if gate[0] == "rot":
            _, axis, qubit, k = gate
            states = _apply_rotation(states, axis, qubit, params[:, k], n)
        elif gate[0] == "cnot":
            states = states[:, _cnot_permutation(n, gate[1], gate[2])]
        else:
            states = states * _cz_signs(n, gate[1], gate[2])[None, :]
    return states


def apply_ansatz(spec: AnsatzSpec, params: np.ndarray) -> StateVector:
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.n_params,):
        raise ShapeError(f"expected {spec.n_params} parameters, got shape {params.shape}")
    return StateVector(_run_circuit(spec, params[None, :])[0])


def _expectation_batch(h: SparseHermitian, states: np.ndarray) -> np.ndarray:
    rows, cols, vals = h.coo
    if states.shape[1] != h.dim:
        raise ShapeError(f"state dim {states.shape[1]} vs matrix dim {h.dim}")
    if len(rows) == 0:
        return np.zeros(states.shape[0])
    e = np.einsum("br,r,br->b", np.conj(states[:, rows]), vals, states[:, cols])
    worst = float(np.max(np.abs(e.imag))) if e.size else 0.0
    if worst > 1e-8:
        raise NumericalError(f"expectation has imaginary residue {worst}")
    return e.real


def expectation(h: SparseHermitian, psi: StateVector) -> float:
    """<psi|H|psi>; the tiny imaginary residue is checked, then discarded."""
    return float(_expectation_batch(h, psi.amplitudes[None, :])[0])


def _shifted_parameter_batch(params: np.ndarray) -> np.ndarray:
    n = params.size
    batch = np.tile(params, (2 * n, 1))
    step = np.pi / 2
    batch[np.arange(n), np.arange(n)] += step
    batch[n + np.arange(n), np.arange(n)] -= step
    return batch


def parameter_shift_grad(h: SparseHermitian, spec: AnsatzSpec,
                         params: np.ndarray) -> np.ndarray:
    """Exact gradient via the two-point rule: [f(+pi/2) - f(-pi/2)] / 2 per angle."""
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.n_params,):
        raise ShapeError(f"expected {spec.n_params} parameters, got shape {params.shape}")
    energies = _expectation_batch(h, _run_circuit(spec, _shifted_parameter_batch(params)))
    n = params.size
    return (energies[:n] - energies[n:]) / 2.0


class AdamState:
    """Adam recurrences with decoupled weight decay on one flat vector."""

    def __init__(self, size: int, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0

    def update(self, params: np.ndarray, grad: np.ndarray, lr: float,
               weight_decay: float = 0.0) -> None:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        if weight_decay:
            params -= lr * weight_decay * params
        params -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _learning_rate(cfg: VqeConfig, completed_steps: int) -> float:
    if cfg.scheduler is Scheduler.COSINE_ANNEALING:
        return cfg.learning_rate * (1 + np.cos(np.pi * completed_steps / cfg.max_steps)) / 2
    return cfg.learning_rate


def converged_at(losses: list[float], rel_tol: float) -> int | None:
    """First step t >= 1 with |L_t - L_{t-1}| / max(|L_{t-1}|, 1e-12) < rel_tol."""
    for t in range(1, len(losses)):
        denom = max(abs(losses[t - 1]), 1e-12)
        if abs(losses[t] - losses[t - 1]) / denom < rel_tol:
            return t
    return None


def run_vqe(h: SparseHermitian, spec: AnsatzSpec, cfg: VqeConfig,
            init: np.ndarray) -> VqeTrace:
    """Adam-optimize the ansatz from ``init`` and record the full loss history.

    loss_history[t] is the energy after t updates (entry 0 is the energy at
    ``init``); the loop always runs to cfg.max_steps unless early_stop is set,
    in which case it halts once the relative-change criterion first fires.
    """
    init = np.asarray(init, dtype=float)
    if init.shape != (spec.n_params,):
        raise ShapeError(f"expected {spec.n_params} initial parameters, got {init.shape}")
    theta = init.copy()
    n = spec.n_params
    adam = AdamState(n)
    losses: list[float] = []
    converged: int | None = None
    tol = cfg.convergence_rel_tol

    def record(value: float) -> None:
        nonlocal converged
        if not np.isfinite(value):
            raise DivergenceError(len(losses))
        losses.append(value)
        t = len(losses) - 1
        if converged is None and t >= 1:
            if abs(losses[t] - losses[t - 1]) / max(abs(losses[t - 1]), 1e-12) < tol:
                converged = t

    stopped = False
    for step in range(cfg.max_steps):
        batch = np.concatenate([_shifted_parameter_batch(theta), theta[None, :]])
        energies = _expectation_batch(h, _run_circuit(spec, batch))
        record(float(energies[2 * n]))  # loss after `step` updates
        if cfg.early_stop and converged is not None:
            stopped = True
            break
        grad = (energies[:n] - energies[n:2 * n]) / 2.0
        adam.update(theta, grad, _learning_rate(cfg, step), cfg.weight_decay)
    if not stopped:
        record(float(_expectation_batch(h, _run_circuit(spec, theta[None, :]))[0]))
    return VqeTrace(losses, theta, converged, cfg)
