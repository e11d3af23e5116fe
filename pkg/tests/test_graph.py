import numpy as np
import pytest

from qracle.errors import ValidityError
from qracle.graph import (
    adjacency_weight,
    feature_dim,
    graph_from_json,
    graph_to_json,
    hamiltonian_to_graph,
)
from qracle.models import Application, InstanceMeta, heisenberg_xyz, random_hamiltonian
from qracle.pauli import PauliString, PauliSum, expand_to_matrix


def meta_for(app=Application.RANDOM_VQE, n=2, index=0, **params):
    defaults = {
        Application.HEISENBERG_XYZ: {"J1": 1.0, "J2": 1.0, "J3": 1.0},
        Application.RANDOM_VQE: {},
        Application.H2: {"bond_length_angstrom": 0.74},
    }
    return InstanceMeta(app, index, n, params or defaults[app])


class TestFeatureDim:
    def test_table(self):
        assert feature_dim(Application.HEISENBERG_XYZ) == 5
        assert feature_dim(Application.ISING_2D) == 4
        assert feature_dim(Application.FERMI_HUBBARD) == 4
        assert feature_dim(Application.H2) == 3
        assert feature_dim(Application.RANDOM_VQE) == 2


class TestAdjacencyWeight:
    def test_values(self):
        assert adjacency_weight((1.0, 0.0)) == 1.0
        assert adjacency_weight((0.0, -1.0)) == 1.0
        assert adjacency_weight((3.0, 4.0)) == 5.0


class TestConversion:
    def test_identity_two_qubits(self):
        g = hamiltonian_to_graph(PauliSum.identity(2), meta_for(n=2))
        assert g.n_nodes == 4
        assert len(g.edges) == 4
        assert all(s == d for s, d in g.edges)
        assert np.allclose(g.edge_weights, [[1.0, 0.0]] * 4)

    def test_single_z(self):
        h = PauliSum.from_terms(1, [(1.0, PauliString("Z"))])
        g = hamiltonian_to_graph(h, meta_for(n=1))
        assert g.n_nodes == 2
        assert [tuple(e) for e in g.edges] == [(0, 0), (1, 1)]
        assert np.allclose(g.edge_weights, [[1.0, 0.0], [-1.0, 0.0]])

    def test_single_x_off_diagonal(self):
        h = PauliSum.from_terms(1, [(1.0, PauliString("X"))])
        g = hamiltonian_to_graph(h, meta_for(n=1))
        assert sorted(tuple(e) for e in g.edges) == [(0, 1), (1, 0)]
        assert np.allclose(g.edge_weights, [[1.0, 0.0], [1.0, 0.0]])

    def test_non_hermitian_rejected(self):
        h = PauliSum.from_terms(1, [(1j, PauliString("X"))])
        with pytest.raises(ValidityError):
            hamiltonian_to_graph(h, meta_for(n=1))

    def test_qubit_count_mismatch_rejected(self):
        with pytest.raises(ValidityError):
            hamiltonian_to_graph(PauliSum.identity(3), meta_for(n=2))

    def test_empty_hamiltonian_keeps_isolated_nodes(self):
        g = hamiltonian_to_graph(PauliSum.zero(2), meta_for(n=2))
        assert g.n_nodes == 4
        assert len(g.edges) == 0

    def test_feature_rows(self):
        meta = meta_for(Application.HEISENBERG_XYZ, n=4, J1=0.5, J2=-1.5, J3=2.0)
        g = hamiltonian_to_graph(heisenberg_xyz(4, 0.5, -1.5, 2.0), meta)
        assert g.node_features.shape == (16, 5)
        assert np.allclose(g.node_features[:, 0], (np.arange(16) + 1) / 16)
        # trailing entries identical on every row
        assert np.allclose(g.node_features[:, 1:], [[4, 0.5, -1.5, 2.0]] * 16)

    def test_edge_count_matches_matrix(self):
        for seed in range(5):
            h = random_hamiltonian(3, 6, (-1, 1), seed=seed)
            g = hamiltonian_to_graph(h, meta_for(n=3, index=seed))
            assert len(g.edges) == len(expand_to_matrix(h).entries)

    def test_matrix_reconstruction_round_trip(self):
        for seed in range(5):
            h = random_hamiltonian(3, 6, (-1, 1), seed=seed)
            m = expand_to_matrix(h)
            g = hamiltonian_to_graph(h, meta_for(n=3, index=seed))
            assert g.to_sparse().entries == m.entries

    def test_hermitian_edge_symmetry(self):
        h = random_hamiltonian(4, 12, (-1, 1), seed=8)
        g = hamiltonian_to_graph(h, meta_for(n=4))
        weights = {
            (int(s), int(d)): complex(re, im)
            for (s, d), (re, im) in zip(g.edges, g.edge_weights)
        }
        seen = set()
        for (s, d), w in weights.items():
            assert (d, s) in weights
            assert weights[(d, s)] == w.conjugate()
            assert (s, d) not in seen
            seen.add((s, d))

    def test_edge_endpoints_valid(self):
        h = random_hamiltonian(3, 5, (-1, 1), seed=2)
        g = hamiltonian_to_graph(h, meta_for(n=3))
        assert g.n_nodes <= 2**3
        assert np.all(g.edges >= 0) and np.all(g.edges < g.n_nodes)


class TestSerialization:
    def test_round_trip_exact(self):
        h = random_hamiltonian(3, 7, (-1, 1), seed=5)
        g = hamiltonian_to_graph(h, meta_for(n=3, index=11))
        g2 = graph_from_json(graph_to_json(g))
        assert g2.meta == g.meta
        assert g2.n_nodes == g.n_nodes
        assert np.array_equal(g2.node_features, g.node_features)
        assert np.array_equal(g2.edges, g.edges)
        assert np.array_equal(g2.edge_weights, g.edge_weights)

    def test_serialization_deterministic(self):
        h = heisenberg_xyz(3, 0.3, 0.7, -0.2)
        meta = meta_for(Application.HEISENBERG_XYZ, n=3, J1=0.3, J2=0.7, J3=-0.2)
        assert graph_to_json(hamiltonian_to_graph(h, meta)) == graph_to_json(
            hamiltonian_to_graph(h, meta)
        )

    def test_field_order(self):
        g = hamiltonian_to_graph(PauliSum.identity(1), meta_for(n=1))
        line = graph_to_json(g)
        assert line.index('"meta"') < line.index('"n_nodes"') < line.index(
            '"features"'
        ) < line.index('"edges"')
