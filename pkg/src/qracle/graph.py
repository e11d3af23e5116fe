"""Hamiltonian-to-graph conversion.

A Hermitian Pauli-sum Hamiltonian on n qubits becomes a directed weighted
graph with one node per basis state (2^n nodes, isolated ones retained),
one directed edge per nonzero matrix entry (self-loops included), complex
entry values stored as (re, im) edge weights, and per-node feature rows of
[normalized basis index, qubit count, application couplings...].

Node indices are 0-based throughout the API; the leading feature entry for
node i is (i + 1) / 2^n so the 2^n basis states map onto (0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import FormatError, ValidityError
from .models import PARAM_KEYS, Application, InstanceMeta
from .pauli import PauliSum, SparseHermitian, expand_to_matrix

#: Node-feature width per application: leading index entry, qubit count,
#: then that application's coupling tuple.
_FEATURE_DIMS = {
    Application.HEISENBERG_XYZ: 5,
    Application.ISING_2D: 4,
    Application.FERMI_HUBBARD: 4,
    Application.H2: 3,
    Application.RANDOM_VQE: 2,
}


def feature_dim(app: Application) -> int:
    return _FEATURE_DIMS[app]


def adjacency_weight(weight: tuple[float, float]) -> float:
    """Real adjacency scalar for a complex edge value: its magnitude."""
    re, im = weight
    return float(np.hypot(re, im))


@dataclass(frozen=True)
class HamiltonianGraph:
    n_nodes: int
    node_features: np.ndarray  # (n_nodes, feature_dim)
    edges: np.ndarray  # (n_edges, 2) int, (src, dst)
    edge_weights: np.ndarray  # (n_edges, 2) float, (re, im)
    meta: InstanceMeta

    @cached_property
    def edge_magnitudes(self) -> np.ndarray:
        if len(self.edge_weights) == 0:
            return np.zeros(0)
        return np.hypot(self.edge_weights[:, 0], self.edge_weights[:, 1])

    def to_sparse(self) -> SparseHermitian:
        """Rebuild the matrix the graph was derived from, entry for entry."""
        entries = {
            (int(s), int(d)): complex(re, im)
            for (s, d), (re, im) in zip(self.edges, self.edge_weights)
        }
        return SparseHermitian(self.n_nodes, entries)


def hamiltonian_to_graph(h: PauliSum, meta: InstanceMeta) -> HamiltonianGraph:
    """Convert a Hermitian, simplified Pauli sum into its basis-state graph.

    Edges are emitted in sorted (src, dst) order so serialization is
    canonical; the conjugate partner of every edge is present because the
    expanded matrix is Hermitian.
    """
    if h.n_qubits != meta.n_qubits:
        raise ValidityError(
            f"meta says {meta.n_qubits} qubits but the Hamiltonian has {h.n_qubits}"
        )
    if not h.is_hermitian():
        raise ValidityError("graph encoding requires a Hermitian Hamiltonian")
    m = expand_to_matrix(h)
    return matrix_to_graph(m, meta)


def matrix_to_graph(m: SparseHermitian, meta: InstanceMeta) -> HamiltonianGraph:
    n_nodes = m.dim
    rows, cols, vals = m.coo
    edges = np.stack([rows, cols], axis=1).astype(int) if len(rows) else np.zeros((0, 2), int)
    weights = (
        np.stack([vals.real, vals.imag], axis=1) if len(rows) else np.zeros((0, 2))
    )
    features = np.empty((n_nodes, feature_dim(meta.application)))
    features[:, 0] = (np.arange(n_nodes) + 1) / n_nodes
    features[:, 1] = meta.n_qubits
    for k, value in enumerate(meta.param_values()):
        features[:, 2 + k] = value
    return HamiltonianGraph(n_nodes, features, edges, weights, meta)


# --- JSON-lines serialization ------------------------------------------------
#
# One object per line with fixed field order:
#   {"meta": {...}, "n_nodes": N, "features": [row-major], "edges": [[s,d,re,im]...]}
# Floats are written with 17 significant digits so parsing round-trips exactly.


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_list(values) -> str:
    return "[" + ", ".join(_fmt(v) for v in values) + "]"


def meta_to_json(meta: InstanceMeta) -> str:
    params = ", ".join(
        f'"{k}": {_fmt(meta.params[k])}' for k in PARAM_KEYS[meta.application]
    )
    return (
        f'{{"application": "{meta.application.value}", "index": {meta.index}, '
        f'"n_qubits": {meta.n_qubits}, "params": {{{params}}}}}'
    )


def meta_from_dict(d: dict) -> InstanceMeta:
    return InstanceMeta(
        Application(d["application"]), int(d["index"]), int(d["n_qubits"]),
        {k: float(v) for k, v in d["params"].items()},
    )


def graph_to_json(g: HamiltonianGraph) -> str:
    edges = ", ".join(
        f"[{int(s)}, {int(d)}, {_fmt(re)}, {_fmt(im)}]"
        for (s, d), (re, im) in zip(g.edges, g.edge_weights)
    )
    return (
        f'{{"meta": {meta_to_json(g.meta)}, "n_nodes": {g.n_nodes}, '
        f'"features": {_fmt_list(g.node_features.ravel())}, "edges": [{edges}]}}'
    )


def graph_from_dict(d: dict) -> HamiltonianGraph:
    meta = meta_from_dict(d["meta"])
    n_nodes = int(d["n_nodes"])
    width = feature_dim(meta.application)
    features = np.array(d["features"], dtype=float).reshape(n_nodes, width)
    raw = d["edges"]
    if raw:
        arr = np.array(raw, dtype=float)
        edges = arr[:, :2].astype(int)
        weights = arr[:, 2:]
    else:
        edges = np.zeros((0, 2), int)
        weights = np.zeros((0, 2))
    return HamiltonianGraph(n_nodes, features, edges, weights, meta)


def graph_from_json(line: str) -> HamiltonianGraph:
    try:
        d = json.loads(line)
    except json.JSONDecodeError as err:
        raise FormatError(f"bad graph record: {err}") from None
    return graph_from_dict(d)
