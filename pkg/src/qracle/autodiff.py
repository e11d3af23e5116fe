"""Minimal dense-tensor engine with reverse-mode automatic differentiation.

Just enough machinery for the graph network: 64-bit float tensors, a tape
that records primitive applications in execution order, and exact
vector-Jacobian products replayed in reverse.  Graph sparsity is expressed
through gather/scatter over explicit edge-index lists rather than sparse
matrices.

Ops record onto the innermost active ``Tape`` (a context manager); with no
tape active they are plain forward computations, which is how evaluation
passes run.  A tape and its tensors belong to one thread.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

import numpy as np

from .errors import FormatError, ShapeError, StateError

_LOCAL = threading.local()


def _active_tape() -> "Tape | None":
    return getattr(_LOCAL, "tapes", [None])[-1]


class Tensor:
    """Dense float64 array with an optional accumulated gradient."""

    __slots__ = ("values", "requires_grad", "grad", "_needy")

    def __init__(self, values, requires_grad: bool = False):
        self.values = np.asarray(values, dtype=float)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        # True when a gradient path can reach a tracked tensor through this
        # one; ops propagate it so backward can skip dead branches.
        self._needy = requires_grad

    @property
    def shape(self):
        return self.values.shape

    def zero_grad(self):
        self.grad = None

    def accumulate(self, g: np.ndarray):
        if self.grad is None:
            # backward closures hand over fresh arrays; broadcast-degenerate
            # cases (scalar seeds) still need materializing
            self.grad = np.array(g, dtype=float) if np.shape(g) == self.values.shape \
                else np.broadcast_to(g, self.values.shape).astype(float)
        else:
            self.grad += g

    def detach(self) -> "Tensor":
        return Tensor(self.values.copy())

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Tape:
    """Execution-ordered record of primitive applications.

    ``backward`` seeds the loss gradient with 1 and replays the records in
    exact reverse order, accumulating vector-Jacobian products into each
    tensor's ``grad``.
    """

    def __init__(self):
        self.nodes: list[tuple[tuple[Tensor, ...], Tensor, object]] = []

    def __enter__(self):
        if not hasattr(_LOCAL, "tapes"):
            _LOCAL.tapes = [None]
        _LOCAL.tapes.append(self)
        return self

    def __exit__(self, *exc):
        _LOCAL.tapes.pop()
        return False

    def record(self, inputs: tuple[Tensor, ...], output: Tensor, backward) -> None:
        self.nodes.append((inputs, output, backward))

    def backward(self, loss: Tensor, seed: float = 1.0) -> None:
        if loss.values.shape != ():
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.values.shape}")
        loss.accumulate(np.asarray(seed, dtype=float))
        for inputs, output, fn in reversed(self.nodes):
            if output.grad is None:
                continue
            for tensor, grad in zip(inputs, fn(output.grad)):
                if grad is not None:
                    tensor.accumulate(grad)


def _record(inputs, out_values, backward) -> Tensor:
    out = Tensor(out_values)
    tape = _active_tape()
    if tape is not None:
        out._needy = any(t._needy for t in inputs)
        tape.record(inputs, out, backward)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.values.ndim != 2 or b.values.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul mismatch: {a.shape} @ {b.shape}")
    need_a, need_b = a._needy, b._needy  # skip dead-branch products

    def backward(g):
        return (g @ b.values.T if need_a else None,
                a.values.T @ g if need_b else None)

    return _record((a, b), a.values @ b.values, backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; also accepts a (d,) row bias against an (n, d) matrix."""
    row_bias = a.values.ndim == 2 and b.values.ndim == 1 and a.shape[1] == b.shape[0]
    if not row_bias and a.shape != b.shape:
        raise ShapeError(f"add mismatch: {a.shape} + {b.shape}")

    def backward(g):
        return g, g.sum(axis=0) if row_bias else g

    return _record((a, b), a.values + b.values, backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; also accepts an (m, 1) column against (m, d)."""
    col = a.values.ndim == 2 and b.values.ndim == 2 and b.shape == (a.shape[0], 1)
    if not col and a.shape != b.shape:
        raise ShapeError(f"mul mismatch: {a.shape} * {b.shape}")

    def backward(g):
        gb = g * a.values
        return g * b.values, gb.sum(axis=1, keepdims=True) if col else gb

    return _record((a, b), a.values * b.values, backward)


def scale(a: Tensor, factor: float) -> Tensor:
    def backward(g):
        return (g * factor,)

    return _record((a,), a.values * factor, backward)


def relu(a: Tensor) -> Tensor:
    mask = a.values > 0  # subgradient at the kink is 0

    def backward(g):
        return (g * mask,)

    return _record((a,), np.where(mask, a.values, 0.0), backward)


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    mask = a.values > 0

    def backward(g):
        return (g * np.where(mask, 1.0, slope),)

    return _record((a,), np.where(mask, a.values, slope * a.values), backward)


def row_softmax(a: Tensor) -> Tensor:
    if a.values.ndim != 2:
        raise ShapeError(f"row_softmax needs a matrix, got {a.shape}")
    shifted = a.values - np.max(a.values, axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        dot = np.sum(g * y, axis=1, keepdims=True)
        return (y * (g - dot),)

    return _record((a,), y, backward)


def attention_scores(left: Tensor, right: Tensor, mask: Tensor,
                     slope: float = 0.2) -> Tensor:
    """LeakyReLU(left_i + right_j) + mask_ij in one step.

    ``left`` and ``right`` are (n, 1) per-node score pieces; ``mask`` is a
    constant additive neighbourhood mask (no gradient is produced for it).
    Equivalent to the transpose/outer-sum/leaky_relu/add chain, fused to
    keep the tape short on the training hot path.
    """
    if left.shape != right.shape or left.values.ndim != 2 or left.shape[1] != 1:
        raise ShapeError(f"score pieces must be (n, 1), got {left.shape} and {right.shape}")
    n = left.shape[0]
    if mask.shape != (n, n):
        raise ShapeError(f"mask must be ({n}, {n}), got {mask.shape}")
    pre = left.values + right.values.T
    positive = pre > 0

    def backward(g):
        dpre = g * np.where(positive, 1.0, slope)
        return dpre.sum(axis=1, keepdims=True), dpre.sum(axis=0)[:, None], None

    out_values = np.where(positive, pre, slope * pre) + mask.values
    return _record((left, right, mask), out_values, backward)


def gather_rows(a: Tensor, index: np.ndarray) -> Tensor:
    index = np.asarray(index, dtype=int)
    if a.values.ndim != 2:
        raise ShapeError(f"gather_rows needs a matrix, got {a.shape}")

    def backward(g):
        out = np.zeros_like(a.values)
        np.add.at(out, index, g)
        return (out,)

    return _record((a,), a.values[index], backward)


def scatter_add_rows(a: Tensor, index: np.ndarray, n_rows: int) -> Tensor:
    index = np.asarray(index, dtype=int)
    if a.values.ndim != 2 or len(index) != a.shape[0]:
        raise ShapeError(f"scatter mismatch: values {a.shape}, index {index.shape}")
    out = np.zeros((n_rows, a.shape[1]))
    np.add.at(out, index, a.values)

    def backward(g):
        return (g[index],)

    return _record((a,), out, backward)


def transpose(a: Tensor) -> Tensor:
    if a.values.ndim != 2:
        raise ShapeError(f"transpose needs a matrix, got {a.shape}")

    def backward(g):
        return (g.T,)

    return _record((a,), a.values.T, backward)


def mean_all(a: Tensor) -> Tensor:
    size = a.values.size

    def backward(g):
        return (np.full_like(a.values, float(g) / size),)

    return _record((a,), a.values.mean(), backward)


def mse(pred: Tensor, target: Tensor) -> Tensor:
    if pred.shape != target.shape:
        raise ShapeError(f"mse mismatch: {pred.shape} vs {target.shape}")
    diff = pred.values - target.values
    size = diff.size

    def backward(g):
        d = (2.0 * float(g) / size) * diff
        return d, -d

    return _record((pred, target), np.mean(diff * diff), backward)


class Adam:
    """Decoupled-weight-decay Adam over a list of tracked tensors."""

    def __init__(self, params: list[Tensor], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8, weight_decay: float = 0.0):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = [np.zeros_like(p.values) for p in self.params]
        self.v = [np.zeros_like(p.values) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self, lr: float | None = None):
        lr = self.lr if lr is None else lr
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for k, p in enumerate(self.params):
            if p.grad is None:
                raise StateError(f"parameter {k} has no gradient")
            g = p.grad
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            if self.weight_decay:
                p.values -= lr * self.weight_decay * p.values
            p.values -= (lr / c1) * m / (np.sqrt(v / c2) + self.eps)


def adam_step(params: list[Tensor], lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8, weight_decay: float = 0.0, state: Adam | None = None) -> Adam:
    """One in-place Adam update; pass the returned state back in to continue."""
    if state is None:
        state = Adam(params, lr, beta1, beta2, eps, weight_decay)
    state.step(lr)
    return state


# --- checkpoints --------------------------------------------------------------
#
# A checkpoint is a directory: manifest.json lists tensor names/shapes/files
# plus caller metadata, and each tensor is a raw little-endian float64 blob.

CHECKPOINT_SCHEMA = "qracle-ckpt-v1"


def save_checkpoint(path, named_tensors: list[tuple[str, Tensor]], extra: dict | None = None):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {"schema": CHECKPOINT_SCHEMA, "extra": extra or {}, "tensors": []}
    for k, (name, tensor) in enumerate(named_tensors):
        fname = f"t{k:03d}.bin"
        (path / fname).write_bytes(tensor.values.astype("<f8").tobytes())
        manifest["tensors"].append(
            {"name": name, "shape": list(tensor.shape), "file": fname}
        )
    (path / "manifest.json").write_text(json.dumps(manifest, indent=1), encoding="utf-8")


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    try:
        manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FormatError(f"no checkpoint manifest under {path}") from None
    if manifest.get("schema") != CHECKPOINT_SCHEMA:
        raise FormatError(f"unexpected checkpoint schema {manifest.get('schema')!r}")
    tensors = {}
    for entry in manifest["tensors"]:
        raw = (path / entry["file"]).read_bytes()
        tensors[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(entry["shape"]).copy()
    return tensors, manifest["extra"]
