"""Evaluation metrics and the Random-vs-GNN initialization comparison.

Per test instance an initialization is drawn (standard normal for the
Random scheme, the trained network's prediction for the GNN scheme), the
same optimization budget is spent, and three quantities are recorded: the
loss before the first update, the first step at which the relative loss
change drops below tolerance (capped at the step budget when it never
does), and the final energy.  Final-energy accuracy is summarized as SMAPE
against the exact ground energies.
"""

from __future__ import annotations

import datetime as _dt
import enum
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CompatibilityError, ConsistencyError, DomainError, ShapeError
from .gnn import GnnModel, predict_init
from .models import Application
from .pipeline import VqeRecord
from .presets import ansatz_for, label_dim
from .sim import VqeConfig, run_vqe


def smape(pred, truth) -> float:
    """Symmetric mean absolute percentage error in [0, 200].

    Terms with |p| + |t| below 1e-12 contribute zero.
    """
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.ndim != 1 or pred.size == 0:
        raise ShapeError(f"smape needs equal nonzero-length vectors, got "
                         f"{pred.shape} vs {truth.shape}")
    scale = (np.abs(pred) + np.abs(truth)) / 2.0
    terms = np.where(scale < 0.5e-12, 0.0, np.abs(pred - truth) / np.where(scale == 0, 1, scale))
    return float(100.0 * terms.mean())


def mre(pred, truth) -> float:
    """Mean relative error in percent; rejects near-zero reference values."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.ndim != 1 or pred.size == 0:
        raise ShapeError(f"mre needs equal nonzero-length vectors, got "
                         f"{pred.shape} vs {truth.shape}")
    if np.any(np.abs(truth) <= 1e-12):
        raise DomainError("mre is undefined for near-zero reference values")
    return float(100.0 * np.mean(np.abs(pred - truth) / np.abs(truth)))


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError(f"cosine_similarity needs equal-length vectors, got "
                         f"{a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na <= 1e-12 or nb <= 1e-12:
        raise DomainError("cosine similarity is undefined for zero vectors")
    return float(np.dot(a, b) / (na * nb))


class Scheme(str, enum.Enum):
    RANDOM = "random"
    GNN = "gnn"


@dataclass(frozen=True)
class SchemeResult:
    scheme: Scheme
    application: Application
    initial_losses: list[float]
    final_energies: list[float]
    ground_energies: list[float]
    converged_steps: list[int]
    mean_initial_loss: float
    mean_final_energy: float
    mean_ground_energy: float
    mean_convergence_steps: float

    @staticmethod
    def from_lists(scheme, application, initial, final, ground, steps) -> "SchemeResult":
        lengths = {len(initial), len(final), len(ground), len(steps)}
        if len(lengths) != 1 or 0 in lengths:
            raise ShapeError("per-instance lists must share a nonzero length")
        return SchemeResult(
            scheme, application, list(initial), list(final), list(ground), list(steps),
            float(np.mean(initial)), float(np.mean(final)),
            float(np.mean(ground)), float(np.mean(steps)),
        )

    @property
    def smape_pct(self) -> float:
        return smape(self.final_energies, self.ground_energies)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "application": self.application.value,
            "initial_losses": self.initial_losses,
            "final_energies": self.final_energies,
            "ground_energies": self.ground_energies,
            "converged_steps": self.converged_steps,
            "mean_initial_loss": self.mean_initial_loss,
            "mean_final_energy": self.mean_final_energy,
            "mean_ground_energy": self.mean_ground_energy,
            "mean_convergence_steps": self.mean_convergence_steps,
            "smape_pct": self.smape_pct,
        }

    @staticmethod
    def from_dict(d: dict) -> "SchemeResult":
        return SchemeResult.from_lists(
            Scheme(d["scheme"]), Application(d["application"]),
            d["initial_losses"], d["final_energies"], d["ground_energies"],
            d["converged_steps"],
        )


def _evaluate_one(args):
    graph_sparse, app, cfg, init = args
    trace = run_vqe(graph_sparse, ansatz_for(app), cfg, init)
    conv = trace.converged_step if trace.converged_step is not None else cfg.max_steps
    return trace.initial_loss, trace.final_loss, conv


def evaluate_scheme(scheme: Scheme, records: list[VqeRecord], vqe_cfg: VqeConfig,
                    model: GnnModel | None = None, seed: int = 0,
                    jobs: int = 1) -> SchemeResult:
    """Run the optimization budget per record from scheme-specific inits."""
    if not records:
        raise ShapeError("no records to evaluate")
    app = records[0].meta.application
    if any(r.meta.application is not app for r in records):
        raise ConsistencyError("records mix applications")
    n_params = label_dim(app)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xE7]))
    work = []
    for r in records:
        if scheme is Scheme.GNN:
            if model is None:
                raise CompatibilityError("the gnn scheme needs a trained model")
            init = predict_init(model, r.graph)
        else:
            init = rng.standard_normal(n_params)
        work.append((r.graph.to_sparse(), app, vqe_cfg, init))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_evaluate_one, work, chunksize=4))
    else:
        outcomes = [_evaluate_one(item) for item in work]

    initial = [o[0] for o in outcomes]
    final = [o[1] for o in outcomes]
    steps = [o[2] for o in outcomes]
    ground = [r.ground_energy for r in records]
    return SchemeResult.from_lists(scheme, app, initial, final, ground, steps)


# --- comparison report ---------------------------------------------------------

_METRICS = ("initial_loss", "smape", "convergence_steps")


def _metric_value(result: SchemeResult, metric: str) -> float:
    if metric == "initial_loss":
        return result.mean_initial_loss
    if metric == "smape":
        return result.smape_pct
    return result.mean_convergence_steps


def comparison_rows(results: list[SchemeResult]) -> list[tuple[str, str, float, int]]:
    """(scheme, metric, mean, n) rows, with gnn-minus-random delta rows when
    both schemes are present."""
    if not results:
        raise ConsistencyError("no results to report")
    app = results[0].application
    ground = results[0].ground_energies
    for r in results[1:]:
        if r.application is not app:
            raise ConsistencyError("results span different applications")
        if r.ground_energies != ground:
            raise ConsistencyError("results were computed on different test sets")
    rows = []
    by_scheme = {}
    for r in results:
        by_scheme[r.scheme] = r
        for metric in _METRICS:
            rows.append((r.scheme.value, metric, _metric_value(r, metric),
                         len(r.initial_losses)))
    if Scheme.RANDOM in by_scheme and Scheme.GNN in by_scheme:
        for metric in _METRICS:
            delta = _metric_value(by_scheme[Scheme.GNN], metric) - _metric_value(
                by_scheme[Scheme.RANDOM], metric
            )
            rows.append(("delta", metric, delta, len(ground)))
    return rows


def format_table(rows) -> str:
    lines = [f"{'scheme':<8} {'metric':<18} {'mean':>14} {'n':>6}"]
    for scheme, metric, value, n in rows:
        lines.append(f"{scheme:<8} {metric:<18} {value:>14.6f} {n:>6}")
    return "\n".join(lines)


def rows_to_csv(rows) -> str:
    out = ["scheme,metric,mean,n"]
    for scheme, metric, value, n in rows:
        out.append(f"{scheme},{metric},{format(value, '.17g')},{n}")
    return "\n".join(out) + "\n"


def default_run_dir(base, seed: int) -> Path:
    stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S")
    return Path(base) / f"{stamp}-seed{seed}"


def report(results: list[SchemeResult], out_dir, seed: int = 0) -> dict:
    """Emit the comparison table plus CSV/JSON artifacts under ``out_dir``."""
    rows = comparison_rows(results)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "comparison.csv").write_text(rows_to_csv(rows), encoding="utf-8")
    payload = {
        "seed": seed,
        "application": results[0].application.value,
        "rows": [list(r) for r in rows],
        "schemes": [r.to_dict() for r in results],
    }
    (out_dir / "comparison.json").write_text(json.dumps(payload, indent=1),
                                             encoding="utf-8")
    return {"rows": rows, "table": format_table(rows), "dir": str(out_dir)}
