import numpy as np
import pytest

from qracle.autodiff import Tape, Tensor
from qracle.errors import CompatibilityError, ShapeError
from qracle.gnn import (
    GnnConfig,
    GnnModel,
    _forward_prepared,
    gat_forward,
    gcn_forward,
    load_model,
    model_forward,
    predict_init,
    prepare_graph,
    save_model,
    train,
)
from qracle.graph import HamiltonianGraph, hamiltonian_to_graph
from qracle.models import Application, InstanceMeta
from qracle.pauli import PauliString, PauliSum


def make_graph(features, edges, weights, n_qubits=1):
    features = np.asarray(features, dtype=float)
    meta = InstanceMeta(Application.RANDOM_VQE, 0, n_qubits, {})
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    weights = np.asarray(weights, dtype=float).reshape(-1, 2)
    return HamiltonianGraph(len(features), features, edges, weights, meta)


def small_config(in_dim, out_dim=4, seed=0, **kw):
    defaults = dict(gcn_hidden=8, gat_hidden=8, mlp_hidden=16, gat_heads=2,
                    epochs=5, batch_size=4)
    defaults.update(kw)
    return GnnConfig(in_dim=in_dim, out_dim=out_dim, seed=seed, **defaults)


def gcn_dense_oracle(features, sym_edges, w, b):
    """Hand aggregation: relu(D^-1/2 (A + I) D^-1/2 X W + b)."""
    n = len(features)
    a = np.zeros((n, n))
    for i, j, wt in sym_edges:
        a[i, j] = wt
    a_tilde = a + np.eye(n)
    d = a_tilde.sum(axis=1)
    norm = a_tilde / np.sqrt(np.outer(d, d))
    return np.maximum(norm @ features @ w + b, 0.0)


class TestGcnLayer:
    def test_isolated_node_identity_weight(self):
        g = make_graph([[1.0, -2.0]], np.zeros((0, 2)), np.zeros((0, 2)))
        prep = prepare_graph(g)
        out = gcn_forward(Tensor(g.node_features), prep,
                          Tensor(np.eye(2)), Tensor(np.zeros(2)))
        assert np.allclose(out.values, [[1.0, 0.0]])

    def test_two_identical_nodes_symmetric_average(self):
        x = [[0.5, 1.5], [0.5, 1.5]]
        g = make_graph(x, [[0, 1], [1, 0]], [[1.0, 0.0], [1.0, 0.0]])
        out = gcn_forward(Tensor(g.node_features), prepare_graph(g),
                          Tensor(np.eye(2)), Tensor(np.zeros(2)))
        assert np.allclose(out.values, np.maximum(x, 0.0), atol=1e-12)

    def test_three_node_path_matches_hand_oracle(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(3, 4))
        w = rng.normal(size=(4, 5))
        b = rng.normal(size=5)
        edges = [[0, 1], [1, 0], [1, 2], [2, 1]]
        weights = [[0.7, 0.0], [0.7, 0.0], [1.3, 0.0], [1.3, 0.0]]
        g = make_graph(x, edges, weights)
        out = gcn_forward(Tensor(x), prepare_graph(g), Tensor(w), Tensor(b))
        want = gcn_dense_oracle(
            x, [(0, 1, 0.7), (1, 0, 0.7), (1, 2, 1.3), (2, 1, 1.3)], w, b
        )
        assert np.allclose(out.values, want, atol=1e-12)

    def test_diagonal_entry_adds_to_self_loop(self):
        # A stored self-loop edge of magnitude 2 plus the implicit unit
        # self-loop gives degree 3 on an otherwise isolated node.
        g = make_graph([[3.0]], [[0, 0]], [[2.0, 0.0]])
        prep = prepare_graph(g)
        assert np.allclose(prep.agg_coeff.sum(), (2.0 + 1.0) / 3.0)


class TestGatLayer:
    def heads(self, rng, din, dout, k=1):
        return [
            (Tensor(rng.normal(size=(din, dout))),
             Tensor(rng.normal(size=(dout, 1))),
             Tensor(rng.normal(size=(dout, 1))))
            for _ in range(k)
        ]

    def test_identical_features_uniform_attention(self):
        rng = np.random.default_rng(1)
        x = np.tile(rng.normal(size=(1, 3)), (4, 1))
        edges = [[0, 1], [1, 0], [1, 2], [2, 1], [2, 3], [3, 2]]
        g = make_graph(x, edges, [[1.0, 0.0]] * 6)
        prep = prepare_graph(g)
        _, atts = gat_forward(Tensor(x), prep, self.heads(rng, 3, 5, 2),
                              return_attention=True)
        neigh = {0: 2, 1: 3, 2: 3, 3: 2}  # |N(i) + self|
        for e in atts:
            for i in range(4):
                nz = e[i][e[i] > 0]
                assert len(nz) == neigh[i]
                assert np.allclose(nz, 1.0 / neigh[i], atol=1e-12)

    def test_single_node_reduces_to_relu_linear(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(1, 3))
        g = make_graph(x, np.zeros((0, 2)), np.zeros((0, 2)))
        heads = self.heads(rng, 3, 4, 1)
        out, atts = gat_forward(Tensor(x), prepare_graph(g), heads,
                                return_attention=True)
        assert np.allclose(atts[0], [[1.0]])
        assert np.allclose(out.values, np.maximum(x @ heads[0][0].values, 0.0))

    def test_two_node_hand_chain(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 3))
        g = make_graph(x, [[0, 1], [1, 0]], [[1.0, 0.0]] * 2)
        heads = self.heads(rng, 3, 4, 1)
        out = gat_forward(Tensor(x), prepare_graph(g), heads)
        w, a_src, a_dst = (t.values for t in heads[0])
        h = x @ w
        sl, sr = h @ a_src, h @ a_dst
        scores = sl + sr.T
        scores = np.where(scores > 0, scores, 0.2 * scores)
        e = np.exp(scores - scores.max(axis=1, keepdims=True))
        e /= e.sum(axis=1, keepdims=True)
        want = np.maximum(e @ h, 0.0)
        assert np.allclose(out.values, want, atol=1e-12)

    def test_attention_rows_sum_to_one(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(5, 3))
        edges = [[0, 1], [1, 0], [2, 3], [3, 2], [0, 4], [4, 0]]
        g = make_graph(x, edges, [[1.0, 0.0]] * 6)
        _, atts = gat_forward(Tensor(x), prepare_graph(g),
                              self.heads(rng, 3, 6, 3), return_attention=True)
        for e in atts:
            assert np.max(np.abs(e.sum(axis=1) - 1.0)) <= 1e-12


def z_graph(meta_index=0):
    h = PauliSum.from_terms(1, [(1.0, PauliString("Z"))])
    return hamiltonian_to_graph(h, InstanceMeta(Application.RANDOM_VQE, meta_index, 1, {}))


def identity_graph(meta_index=0):
    return hamiltonian_to_graph(
        PauliSum.identity(1), InstanceMeta(Application.RANDOM_VQE, meta_index, 1, {})
    )


def x_graph(meta_index=0):
    h = PauliSum.from_terms(1, [(1.0, PauliString("X"))])
    return hamiltonian_to_graph(h, InstanceMeta(Application.RANDOM_VQE, meta_index, 1, {}))


class TestModelForward:
    def test_shape_and_finiteness(self):
        model = GnnModel(small_config(in_dim=2))
        out = model_forward(model, z_graph())
        assert out.shape == (4,)
        assert np.all(np.isfinite(out))

    def test_feature_width_mismatch(self):
        model = GnnModel(small_config(in_dim=7))
        with pytest.raises(ShapeError):
            model_forward(model, z_graph())

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        model = GnnModel(small_config(in_dim=3, seed=1))
        n = 6
        x = rng.normal(size=(n, 3))
        pairs = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (1, 4)]
        edges = []
        weights = []
        for i, j in pairs:
            wt = rng.normal()
            edges += [[i, j], [j, i]]
            weights += [[wt, 0.0], [wt, 0.0]]
        g = make_graph(x, edges, weights)
        out = model_forward(model, g)

        perm = rng.permutation(n)
        inv = np.argsort(perm)
        g2 = make_graph(x[perm], [[inv[i], inv[j]] for i, j in np.array(edges)], weights)
        out2 = model_forward(model, g2)
        assert np.max(np.abs(out - out2)) <= 1e-9

    @pytest.mark.xfail(
        strict=True,
        reason="magnitude adjacency cannot separate diagonals +1 and -1: the "
        "identity and single-Z graphs present identical inputs to the network",
    )
    def test_identity_vs_z_distinguishable(self):
        differing = 0
        for seed in range(100):
            model = GnnModel(small_config(in_dim=2, seed=seed))
            a = model_forward(model, identity_graph())
            b = model_forward(model, z_graph())
            if np.max(np.abs(a - b)) > 1e-9:
                differing += 1
        assert differing >= 99

    def test_diagonal_vs_offdiagonal_distinguishable(self):
        # Structural difference (self-loops vs off-diagonal edges) is what
        # the encoding can and does separate.  Hidden widths are kept
        # moderate: very narrow stacks occasionally zero the signal out
        # through dead ReLUs.
        differing = 0
        for seed in range(100):
            model = GnnModel(small_config(in_dim=2, seed=seed, gcn_hidden=48,
                                          gat_hidden=48, mlp_hidden=64,
                                          gat_heads=4))
            a = model_forward(model, x_graph())
            b = model_forward(model, z_graph())
            if np.max(np.abs(a - b)) > 1e-9:
                differing += 1
        assert differing >= 99


class TestEndToEndGradients:
    def test_full_stack_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        model = GnnModel(small_config(in_dim=3, out_dim=5, seed=2))
        x = rng.normal(size=(3, 3))
        g = make_graph(x, [[0, 1], [1, 0], [1, 2], [2, 1]],
                       [[0.8, 0.0], [0.8, 0.0], [1.1, 0.0], [1.1, 0.0]])
        prep = prepare_graph(g)
        label = Tensor(rng.normal(size=(1, 5)))

        for p in model.parameters():
            p.zero_grad()
        with Tape() as tape:
            loss = __import__("qracle.autodiff", fromlist=["mse"]).mse(
                _forward_prepared(model, prep), label
            )
        tape.backward(loss)

        def loss_value():
            out = _forward_prepared(model, prep)
            return float(np.mean((out.values - label.values) ** 2))

        rng_probe = np.random.default_rng(7)
        for name, tensor in model.named_parameters():
            flat = tensor.values.ravel()
            probes = rng_probe.choice(flat.size, size=min(4, flat.size), replace=False)
            for k in probes:
                orig = flat[k]
                step = 1e-5
                flat[k] = orig + step
                up = loss_value()
                flat[k] = orig - step
                down = loss_value()
                flat[k] = orig
                fd = (up - down) / (2 * step)
                an = tensor.grad.ravel()[k]
                if abs(fd) < 1e-7 and abs(an) < 1e-7:
                    continue
                rel = abs(an - fd) / max(abs(fd), abs(an))
                assert rel <= 1e-4, f"{name}[{k}]: analytic {an} vs fd {fd}"


class TestTraining:
    def one_graph_dataset(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(4, 3))
        g = make_graph(x, [[0, 1], [1, 0], [2, 3], [3, 2]],
                       [[1.0, 0.0]] * 4)
        label = rng.normal(size=4)
        return [(g, label)]

    def test_memorizes_single_graph(self):
        data = self.one_graph_dataset()
        model = GnnModel(small_config(in_dim=3, out_dim=4, seed=3,
                                      epochs=200, batch_size=1, lr=1e-2))
        report = train(model, data)
        first = report["epochs"][1]["train_mse"]
        last = report["epochs"][-1]["train_mse"]
        assert last <= first / 10.0

    def test_zero_epochs_echoes_initial_mse(self):
        data = self.one_graph_dataset()
        model = GnnModel(small_config(in_dim=3, out_dim=4, epochs=0))
        report = train(model, data)
        assert len(report["epochs"]) == 1
        assert report["epochs"][0]["epoch"] == 0
        assert report["best_epoch"] == 0

    def test_fixed_seed_bit_identical_weights(self):
        data = self.one_graph_dataset() * 3

        def run():
            model = GnnModel(small_config(in_dim=3, out_dim=4, seed=4, epochs=3))
            train(model, data)
            return [t.values.copy() for t in model.parameters()]

        for a, b in zip(run(), run()):
            assert np.array_equal(a, b)

    def test_label_length_check(self):
        g, _ = self.one_graph_dataset()[0]
        model = GnnModel(small_config(in_dim=3, out_dim=4))
        with pytest.raises(ShapeError):
            train(model, [(g, np.zeros(3))])

    def test_validation_logged_and_best_retained(self):
        data = self.one_graph_dataset()
        model = GnnModel(small_config(in_dim=3, out_dim=4, seed=5, epochs=4))
        report = train(model, data, val_data=data)
        assert all("val_mse" in e for e in report["epochs"])
        best = report["best_epoch"]
        assert report["epochs"][best]["val_mse"] == min(
            e["val_mse"] for e in report["epochs"]
        )


class TestCheckpoint:
    def test_round_trip_preserves_predictions(self, tmp_path):
        model = GnnModel(small_config(in_dim=2, seed=6))
        g = z_graph()
        before = model_forward(model, g)
        save_model(model, tmp_path / "ckpt")
        again = load_model(tmp_path / "ckpt")
        after = model_forward(again, g)
        assert np.array_equal(before, after)
        assert again.config == model.config


class TestPredictInit:
    def test_output_lengths_per_application(self):
        from qracle.presets import label_dim

        assert label_dim(Application.HEISENBERG_XYZ) == 8
        assert label_dim(Application.ISING_2D) == 16
        assert label_dim(Application.FERMI_HUBBARD) == 16
        assert label_dim(Application.H2) == 24
        assert label_dim(Application.RANDOM_VQE) == 48

    def test_compatibility_check(self):
        model = GnnModel(small_config(in_dim=2, out_dim=4))
        with pytest.raises(CompatibilityError):
            predict_init(model, z_graph())  # random_vqe ansatz takes 48

    def test_matching_model_predicts(self):
        model = GnnModel(small_config(in_dim=2, out_dim=48))
        out = predict_init(model, z_graph())
        assert out.shape == (48,)
