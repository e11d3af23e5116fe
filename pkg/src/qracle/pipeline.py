"""Dataset construction: sample instances, run the label-generating VQE,
serialize records, and produce deterministic train/test splits.

Every instance is fully determined by (application, count, configs, seed):
grid sampling, per-instance initialization draws, and the optimization
itself are all seeded, and instances are processed independently (and, with
jobs > 1, in parallel) then emitted in index order, so dataset files are
byte-identical across runs.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ParseError, PipelineError, SizeError
from .graph import HamiltonianGraph, _fmt, _fmt_list, graph_from_dict, graph_to_json
from .models import (
    Application,
    InstanceMeta,
    bundled_h2_path,
    fermi_hubbard,
    heisenberg_xyz,
    ising_2d,
    load_h2,
    random_hamiltonian,
    sample_grid,
)
from .graph import hamiltonian_to_graph
from .pauli import expand_to_matrix, min_eigenvalue
from .presets import PRESETS, ansatz_for, coupling_grid, label_dim
from .sim import VqeConfig, run_vqe

log = logging.getLogger(__name__)

DATASET_SCHEMA = "qracle-v1"

#: Stored loss histories longer than this are decimated to every 10th entry
#: plus the first and last.
LOSS_HISTORY_CAP = 501


@dataclass(frozen=True)
class VqeRecord:
    graph: HamiltonianGraph
    label: np.ndarray
    loss_history: list[float]
    ground_energy: float
    meta: InstanceMeta
    converged_step: int | None

    @property
    def initial_loss(self) -> float:
        return self.loss_history[0]

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1]


@dataclass(frozen=True)
class SplitManifest:
    seed: int
    train_indices: list[int]
    test_indices: list[int]

    def to_json(self) -> str:
        return json.dumps(
            {"seed": self.seed, "train_indices": self.train_indices,
             "test_indices": self.test_indices}
        )

    @staticmethod
    def from_json(text: str) -> "SplitManifest":
        d = json.loads(text)
        return SplitManifest(int(d["seed"]), list(d["train_indices"]),
                             list(d["test_indices"]))


def _decimate(history: list[float], cap: int | None) -> list[float]:
    if cap is None or len(history) <= cap:
        return list(history)
    kept = list(history[::10])
    if (len(history) - 1) % 10 != 0:
        kept.append(history[-1])
    return kept


def _instances_for(app: Application, count: int, seed: int,
                   random_term_range=(4, 20), coeff_range=(-1.0, 1.0)):
    """Yield (meta, PauliSum) pairs for `count` sampled instances."""
    preset = PRESETS[app]
    if app is Application.HEISENBERG_XYZ:
        for idx, (j1, j2, j3) in enumerate(sample_grid(coupling_grid(app, count, seed))):
            meta = InstanceMeta(app, idx, 4, {"J1": j1, "J2": j2, "J3": j3})
            yield meta, heisenberg_xyz(4, j1, j2, j3)
    elif app is Application.ISING_2D:
        rows, cols = preset.lattice
        for idx, (j, mu) in enumerate(sample_grid(coupling_grid(app, count, seed))):
            meta = InstanceMeta(app, idx, rows * cols, {"j": j, "mu": mu})
            yield meta, ising_2d(rows, cols, j, mu)
    elif app is Application.FERMI_HUBBARD:
        n = preset.ansatz.n_qubits
        for idx, (t, u) in enumerate(sample_grid(coupling_grid(app, count, seed))):
            meta = InstanceMeta(app, idx, n, {"t": t, "U": u})
            yield meta, fermi_hubbard(n, t, u)
    elif app is Application.H2:
        blocks = load_h2(bundled_h2_path())
        if count > len(blocks):
            raise SizeError(f"H2 fixture holds {len(blocks)} instances, asked for {count}")
        for meta, h in blocks[:count]:
            yield meta, h
    elif app is Application.RANDOM_VQE:
        n = preset.ansatz.n_qubits
        rng = np.random.default_rng(seed)
        for idx in range(count):
            n_terms = int(rng.integers(random_term_range[0], random_term_range[1] + 1))
            term_seed = int(rng.integers(0, 2**31 - 1))
            meta = InstanceMeta(app, idx, n, {})
            yield meta, random_hamiltonian(n, n_terms, coeff_range, term_seed)
    else:  # pragma: no cover
        raise ValueError(f"unknown application {app}")


def _label_one(args):
    """Optimize one instance; module-level so worker processes can import it."""
    meta, hamiltonian, vqe_cfg, init, cap = args
    matrix = expand_to_matrix(hamiltonian)
    graph = hamiltonian_to_graph(hamiltonian, meta)
    ground = min_eigenvalue(matrix)
    trace = run_vqe(matrix, ansatz_for(meta.application), vqe_cfg, init)
    return VqeRecord(
        graph=graph,
        label=trace.final_params,
        loss_history=_decimate(trace.loss_history, cap),
        ground_energy=ground,
        meta=meta,
        converged_step=trace.converged_step,
    )


def build_dataset(app: Application, count: int, vqe_cfg: VqeConfig, seed: int,
                  jobs: int = 1, init_mode: str = "per_instance",
                  loss_history_cap: int | None = LOSS_HISTORY_CAP,
                  max_skip_fraction: float = 0.05) -> list[VqeRecord]:
    """Sample instances, run the labelling VQE on each, return records in order.

    ``init_mode`` selects the standard-normal initialization for the label
    runs: "per_instance" draws a fresh vector per instance, "shared" draws
    one vector reused for every instance.  Instances whose optimization
    diverges are skipped with a warning; more than ``max_skip_fraction``
    skips aborts the build.
    """
    n_params = label_dim(app)
    init_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA5]))
    shared_init = init_rng.standard_normal(n_params)
    work = []
    for meta, hamiltonian in _instances_for(app, count, seed):
        if init_mode == "shared":
            init = shared_init
        elif init_mode == "per_instance":
            init = init_rng.standard_normal(n_params)
        else:
            raise ValueError(f"unknown init_mode {init_mode!r}")
        work.append((meta, hamiltonian, vqe_cfg, init, loss_history_cap))

    records: list[VqeRecord | None] = [None] * len(work)
    skipped = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for k, result in enumerate(pool.map(_try_label_one, work, chunksize=4)):
                if isinstance(result, str):
                    skipped.append(k)
                    log.warning("skipping instance %d: %s", k, result)
                else:
                    records[k] = result
    else:
        for k, item in enumerate(work):
            result = _try_label_one(item)
            if isinstance(result, str):
                skipped.append(k)
                log.warning("skipping instance %d: %s", k, result)
            else:
                records[k] = result

    kept = [r for r in records if r is not None]
    if len(work) and len(skipped) > max_skip_fraction * len(work):
        raise PipelineError(
            f"{len(skipped)} of {len(work)} instances diverged, above the "
            f"{max_skip_fraction:.0%} skip budget"
        )
    return kept


def _try_label_one(args):
    from .errors import DivergenceError

    try:
        return _label_one(args)
    except DivergenceError as err:
        return f"divergence at step {err.step}"


def split(records_or_count, seed: int) -> SplitManifest:
    """Seeded shuffle then 70/30 partition of record indices."""
    total = records_or_count if isinstance(records_or_count, int) else len(records_or_count)
    if total < 2:
        raise SizeError("need at least 2 records to split")
    order = np.random.default_rng(seed).permutation(total)
    n_train = int(np.floor(0.7 * total + 0.5))
    return SplitManifest(
        seed=seed,
        train_indices=[int(i) for i in order[:n_train]],
        test_indices=[int(i) for i in order[n_train:]],
    )


# --- dataset files ------------------------------------------------------------
#
# Versioned JSON lines: a header {"schema": "qracle-v1"} then one record per
# line, extending the graph serialization with label, loss_history,
# ground_energy and converged_step.  Floats carry 17 significant digits.


def record_to_json(r: VqeRecord) -> str:
    graph_part = graph_to_json(r.graph)[1:-1]  # splice into the record object
    conv = "null" if r.converged_step is None else str(r.converged_step)
    return (
        "{" + graph_part
        + f', "label": {_fmt_list(r.label)}'
        + f', "loss_history": {_fmt_list(r.loss_history)}'
        + f', "ground_energy": {_fmt(r.ground_energy)}'
        + f', "converged_step": {conv}' + "}"
    )


def record_from_dict(d: dict) -> VqeRecord:
    graph = graph_from_dict(d)
    conv = d["converged_step"]
    return VqeRecord(
        graph=graph,
        label=np.array(d["label"], dtype=float),
        loss_history=[float(v) for v in d["loss_history"]],
        ground_energy=float(d["ground_energy"]),
        meta=graph.meta,
        converged_step=None if conv is None else int(conv),
    )


def save_dataset(records: list[VqeRecord], path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f'{{"schema": "{DATASET_SCHEMA}"}}\n')
        for r in records:
            fh.write(record_to_json(r) + "\n")


def load_dataset(path) -> list[VqeRecord]:
    path = Path(path)
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        try:
            schema = json.loads(header).get("schema")
        except json.JSONDecodeError:
            raise ParseError("missing dataset header", line=1) from None
        if schema != DATASET_SCHEMA:
            raise FormatError(f"unsupported dataset schema {schema!r}")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                records.append(record_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as err:
                raise ParseError(f"bad record: {err}", line=lineno) from None
    return records
