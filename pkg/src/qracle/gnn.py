"""Graph network mapping Hamiltonian graphs to ansatz parameter vectors.

Architecture: two graph-convolution layers (symmetric degree-normalized
aggregation with weight-1 self-loops added for every node), three
multi-head attention layers (concatenation scoring, LeakyReLU slope 0.2,
softmax over each node's neighbourhood including itself, heads averaged),
mean pooling over nodes, then a two-layer perceptron head whose final
layer is a plain linear regression output.

Edge magnitudes enter only the convolution normalization; attention is
purely feature-driven.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Adam, Tape, Tensor
from .errors import CompatibilityError, DivergenceError, ShapeError
from .graph import HamiltonianGraph
from .models import Application


@dataclass(frozen=True)
class GnnConfig:
    in_dim: int
    out_dim: int
    gcn_hidden: int = 256
    gat_hidden: int = 512
    mlp_hidden: int = 1024
    gat_heads: int = 4
    lr: float = 1e-3
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    readout: str = "mean"  # or "sum"

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "in_dim", "out_dim", "gcn_hidden", "gat_hidden", "mlp_hidden",
            "gat_heads", "lr", "epochs", "batch_size", "seed", "readout")}

    @staticmethod
    def from_dict(d: dict) -> "GnnConfig":
        return GnnConfig(**d)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True)


class GnnModel:
    """Layer stack [GCN, GCN, GAT, GAT, GAT, MLP, MLP] with tracked weights."""

    def __init__(self, config: GnnConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        c = config
        self.gcn_weights = []
        dims = [(c.in_dim, c.gcn_hidden), (c.gcn_hidden, c.gcn_hidden)]
        for din, dout in dims:
            self.gcn_weights.append(
                (_glorot(rng, din, dout, (din, dout)),
                 Tensor(np.zeros(dout), requires_grad=True))
            )
        self.gat_layers = []
        gat_dims = [(c.gcn_hidden, c.gat_hidden)] + [(c.gat_hidden, c.gat_hidden)] * 2
        for din, dout in gat_dims:
            heads = []
            for _ in range(c.gat_heads):
                w = _glorot(rng, din, dout, (din, dout))
                a_src = _glorot(rng, 2 * dout, 1, (dout, 1))
                a_dst = _glorot(rng, 2 * dout, 1, (dout, 1))
                heads.append((w, a_src, a_dst))
            self.gat_layers.append(heads)
        self.mlp_weights = []
        for din, dout in ((c.gat_hidden, c.mlp_hidden), (c.mlp_hidden, c.out_dim)):
            self.mlp_weights.append(
                (_glorot(rng, din, dout, (din, dout)),
                 Tensor(np.zeros(dout), requires_grad=True))
            )

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = []
        for k, (w, b) in enumerate(self.gcn_weights):
            out += [(f"gcn{k}.weight", w), (f"gcn{k}.bias", b)]
        for k, heads in enumerate(self.gat_layers):
            for j, (w, a_src, a_dst) in enumerate(heads):
                out += [
                    (f"gat{k}.head{j}.weight", w),
                    (f"gat{k}.head{j}.attn_src", a_src),
                    (f"gat{k}.head{j}.attn_dst", a_dst),
                ]
        for k, (w, b) in enumerate(self.mlp_weights):
            out += [(f"mlp{k}.weight", w), (f"mlp{k}.bias", b)]
        return out

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def state_values(self) -> list[np.ndarray]:
        return [t.values.copy() for t in self.parameters()]

    def load_state_values(self, values: list[np.ndarray]) -> None:
        for t, v in zip(self.parameters(), values):
            t.values = np.array(v, dtype=float)


@dataclass
class PreparedGraph:
    """Constant per-graph arrays the layers consume."""

    n_nodes: int
    features: np.ndarray
    agg_src: np.ndarray     # message destination node per aggregation entry
    agg_dst: np.ndarray     # message source node per aggregation entry
    agg_coeff: np.ndarray   # (E', 1) normalized weights incl. self-loops
    attn_mask: np.ndarray   # (n, n) 0 on neighbourhood-or-self, -inf elsewhere
    pool: np.ndarray        # (1, n) readout row


def prepare_graph(g: HamiltonianGraph, readout: str = "mean") -> PreparedGraph:
    n = g.n_nodes
    if len(g.edges):
        src = g.edges[:, 0].astype(int)
        dst = g.edges[:, 1].astype(int)
        w = g.edge_magnitudes
    else:
        src = np.zeros(0, int)
        dst = np.zeros(0, int)
        w = np.zeros(0)
    # weight-1 self-loop for every node on top of any diagonal entries
    loop = np.arange(n)
    agg_src = np.concatenate([src, loop])
    agg_dst = np.concatenate([dst, loop])
    weights = np.concatenate([w, np.ones(n)])
    degree = np.zeros(n)
    np.add.at(degree, agg_src, weights)
    coeff = (weights / np.sqrt(degree[agg_src] * degree[agg_dst]))[:, None]
    mask = np.full((n, n), -np.inf)
    mask[src, dst] = 0.0
    mask[loop, loop] = 0.0
    if readout == "mean":
        pool = np.full((1, n), 1.0 / n)
    elif readout == "sum":
        pool = np.ones((1, n))
    else:
        raise ShapeError(f"unknown readout {readout!r}")
    return PreparedGraph(n, g.node_features, agg_src, agg_dst, coeff, mask, pool)


def gcn_forward(x: Tensor, prep: PreparedGraph, w: Tensor, b: Tensor) -> Tensor:
    """ReLU((sum_u w~_vu h_u / sqrt(deg_v deg_u)) W + b) over edges and self-loops."""
    msgs = ad.mul(ad.gather_rows(x, prep.agg_dst), Tensor(prep.agg_coeff))
    agg = ad.scatter_add_rows(msgs, prep.agg_src, prep.n_nodes)
    return ad.relu(ad.add(ad.matmul(agg, w), b))


def gat_forward(x: Tensor, prep: PreparedGraph, heads, slope: float = 0.2,
                return_attention: bool = False):
    """Multi-head attention layer; heads are (W, a_src, a_dst) triples.

    Per head: scores s_ij = LeakyReLU(a_src.W h_i + a_dst.W h_j) softmaxed
    over j in the neighbourhood of i (self included); the head outputs are
    averaged and passed through ReLU.
    """
    mask = Tensor(prep.attn_mask)
    combined = None
    attentions = []
    for w, a_src, a_dst in heads:
        h = ad.matmul(x, w)
        s_i = ad.matmul(h, a_src)  # (n, 1) score piece of the source node
        s_j = ad.matmul(h, a_dst)  # (n, 1) score piece of the attended node
        e = ad.row_softmax(ad.attention_scores(s_i, s_j, mask, slope))
        out = ad.matmul(e, h)
        combined = out if combined is None else ad.add(combined, out)
        if return_attention:
            attentions.append(e.values)
    result = ad.relu(ad.scale(combined, 1.0 / len(heads)))
    if return_attention:
        return result, attentions
    return result


def _forward_prepared(model: GnnModel, prep: PreparedGraph) -> Tensor:
    if prep.features.shape[1] != model.config.in_dim:
        raise ShapeError(
            f"graph features have width {prep.features.shape[1]}, "
            f"model expects {model.config.in_dim}"
        )
    h = Tensor(prep.features)
    for w, b in model.gcn_weights:
        h = gcn_forward(h, prep, w, b)
    for heads in model.gat_layers:
        h = gat_forward(h, prep, heads)
    pooled = ad.matmul(Tensor(prep.pool), h)
    (w1, b1), (w2, b2) = model.mlp_weights
    hidden = ad.relu(ad.add(ad.matmul(pooled, w1), b1))
    return ad.add(ad.matmul(hidden, w2), b2)


def model_forward(model: GnnModel, g: HamiltonianGraph) -> np.ndarray:
    """Forward pass on one graph; returns the (out_dim,) prediction."""
    out = _forward_prepared(model, prepare_graph(g, model.config.readout))
    return out.values[0].copy()


def predict_init(model: GnnModel, g: HamiltonianGraph) -> np.ndarray:
    """Predicted ansatz parameters, used verbatim as a VQE initialization."""
    from .presets import ansatz_for

    expected = ansatz_for(Application(g.meta.application)).n_params
    if model.config.out_dim != expected:
        raise CompatibilityError(
            f"model emits {model.config.out_dim} parameters but the "
            f"{g.meta.application.value} ansatz takes {expected}"
        )
    return model_forward(model, g)


def _dataset_mse(model: GnnModel, prepared, labels) -> float:
    if not prepared:
        return float("nan")
    total = 0.0
    for prep, label in zip(prepared, labels):
        pred = _forward_prepared(model, prep)
        total += float(np.mean((pred.values[0] - label) ** 2))
    return total / len(prepared)


def train(model: GnnModel, train_data, val_data=None) -> dict:
    """Adam/MSE training over (graph, label) pairs with per-epoch logging.

    The model is left holding the weights of the best validation epoch
    (best training epoch when no validation split is given); the returned
    report carries per-epoch losses, the best epoch, config echo and seed.
    """
    cfg = model.config
    for _, label in train_data:
        if len(label) != cfg.out_dim:
            raise ShapeError(f"label length {len(label)} != out_dim {cfg.out_dim}")
    prepared = [prepare_graph(g, cfg.readout) for g, _ in train_data]
    labels = [np.asarray(l, dtype=float) for _, l in train_data]
    val_prepared = [prepare_graph(g, cfg.readout) for g, _ in (val_data or [])]
    val_labels = [np.asarray(l, dtype=float) for _, l in (val_data or [])]

    rng = np.random.default_rng(cfg.seed)
    optimizer = Adam(model.parameters(), lr=cfg.lr)
    epochs_log = []

    def log_epoch(epoch, train_mse):
        entry = {"epoch": epoch, "train_mse": train_mse}
        if val_data is not None:
            entry["val_mse"] = _dataset_mse(model, val_prepared, val_labels)
        epochs_log.append(entry)
        return entry

    initial = log_epoch(0, _dataset_mse(model, prepared, labels))
    best_metric = initial.get("val_mse", initial["train_mse"])
    best_epoch = 0
    best_state = model.state_values()

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(prepared))
        batch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            optimizer.zero_grad()
            with Tape() as tape:
                total = None
                for k in batch:
                    loss_k = ad.mse(_forward_prepared(model, prepared[k]),
                                    Tensor(labels[k][None, :]))
                    total = loss_k if total is None else ad.add(total, loss_k)
                batch_loss = ad.scale(total, 1.0 / len(batch))
            if not np.isfinite(batch_loss.values):
                raise DivergenceError(epoch)
            tape.backward(batch_loss)
            optimizer.step()
            batch_losses.append(float(batch_loss.values))
        entry = log_epoch(epoch, float(np.mean(batch_losses)))
        metric = entry.get("val_mse", entry["train_mse"])
        if metric < best_metric:
            best_metric = metric
            best_epoch = epoch
            best_state = model.state_values()

    model.load_state_values(best_state)
    return {
        "schema": "qracle-train-v1",
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "epochs": epochs_log,
        "best_epoch": best_epoch,
    }


def save_model(model: GnnModel, path) -> None:
    ad.save_checkpoint(path, model.named_parameters(),
                       extra={"config": model.config.to_dict()})


def load_model(path) -> GnnModel:
    tensors, extra = ad.load_checkpoint(path)
    model = GnnModel(GnnConfig.from_dict(extra["config"]))
    for name, tensor in model.named_parameters():
        tensor.values = tensors[name]
    return model
