"""Command-line entry point for batch dataset/model/benchmark runs.

Subcommands: gen-data, split, train, init, eval, compare.  Options may be
given as flags or in a plain ``key = value`` config file (flags win); the
resolved configuration is echoed next to every output so a run can be
reproduced from its artifacts.  QRACLE_SEED serves as the seed fallback.
Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .bench import (
    Scheme,
    SchemeResult,
    comparison_rows,
    default_run_dir,
    evaluate_scheme,
    format_table,
    report,
)
from .errors import CompatibilityError
from .gnn import GnnConfig, GnnModel, load_model, predict_init, save_model, train
from .graph import feature_dim
from .models import Application
from .pipeline import (
    SplitManifest,
    build_dataset,
    load_dataset,
    save_dataset,
    split,
)
from .presets import PRESETS, label_dim
from .sim import Scheduler, VqeConfig

APP_ALIASES = {
    "heisenberg": Application.HEISENBERG_XYZ,
    "ising": Application.ISING_2D,
    "hubbard": Application.FERMI_HUBBARD,
    "h2": Application.H2,
    "random": Application.RANDOM_VQE,
}
APP_ALIASES.update({a.value: a for a in Application})


def load_config_file(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


class Options:
    """Flag values backed by a config file and environment fallbacks."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = load_config_file(args.config) if getattr(args, "config", None) else {}

    def get(self, name, default=None, cast=str):
        flag = getattr(self.args, name, None)
        if flag is not None:
            return flag
        if name in self.config:
            raw = self.config[name]
            return cast(raw) if cast is not bool else raw.lower() in ("1", "true", "yes")
        return default

    def seed(self) -> int:
        value = self.get("seed", cast=int)
        if value is None:
            env = os.environ.get("QRACLE_SEED")
            value = int(env) if env else 0
        return int(value)

    def echo(self, extra: dict) -> str:
        lines = [f"{k} = {v}" for k, v in sorted(extra.items())]
        return "\n".join(lines) + "\n"


def _write_echo(opts: Options, target: Path, resolved: dict) -> None:
    if target.is_dir():
        (target / "config.txt").write_text(opts.echo(resolved), encoding="utf-8")
    else:
        target.with_name(target.name + ".config").write_text(
            opts.echo(resolved), encoding="utf-8"
        )


def _vqe_config(opts: Options, default_steps=2000) -> VqeConfig:
    return VqeConfig(
        learning_rate=opts.get("lr", 1e-3, float),
        max_steps=opts.get("steps", default_steps, int),
        weight_decay=opts.get("weight_decay", 0.0, float),
        scheduler=Scheduler(opts.get("scheduler", "constant")),
        convergence_rel_tol=opts.get("convergence_rel_tol", 1e-5, float),
        seed=opts.seed(),
    )


def cmd_gen_data(args) -> int:
    opts = Options(args)
    app = APP_ALIASES[args.app]
    seed = opts.seed()
    count = opts.get("count", PRESETS[app].default_count, int)
    jobs = opts.get("jobs", 1, int)
    init_mode = opts.get("init_mode", "per_instance")
    cfg = _vqe_config(opts)
    out = Path(args.out)
    started = time.perf_counter()
    records = build_dataset(app, count, cfg, seed, jobs=jobs, init_mode=init_mode)
    save_dataset(records, out)
    elapsed = time.perf_counter() - started
    skipped = count - len(records)
    _write_echo(opts, out, {
        "command": "gen-data", "app": app.value, "count": count, "seed": seed,
        "lr": cfg.learning_rate, "steps": cfg.max_steps,
        "weight_decay": cfg.weight_decay, "scheduler": cfg.scheduler.value,
        "init_mode": init_mode, "jobs": jobs, "out": out,
    })
    print(f"wrote {len(records)} records ({skipped} skipped) to {out} "
          f"in {elapsed:.1f}s")
    return 0


def cmd_split(args) -> int:
    opts = Options(args)
    seed = opts.seed()
    records = load_dataset(args.dataset)
    manifest = split(records, seed)
    out = Path(args.out)
    out.write_text(manifest.to_json() + "\n", encoding="utf-8")
    _write_echo(opts, out, {"command": "split", "dataset": args.dataset,
                            "seed": seed, "out": out})
    print(f"split {len(records)} records into {len(manifest.train_indices)} train / "
          f"{len(manifest.test_indices)} test")
    return 0


def _load_split_sets(dataset_path, split_path):
    records = load_dataset(dataset_path)
    manifest = SplitManifest.from_json(Path(split_path).read_text(encoding="utf-8"))
    train_records = [records[i] for i in manifest.train_indices]
    test_records = [records[i] for i in manifest.test_indices]
    return records, manifest, train_records, test_records


def cmd_train(args) -> int:
    opts = Options(args)
    seed = opts.seed()
    _, _, train_records, test_records = _load_split_sets(args.dataset, args.split)
    app = train_records[0].meta.application
    config = GnnConfig(
        in_dim=feature_dim(app),
        out_dim=label_dim(app),
        gcn_hidden=opts.get("gcn_hidden", 256, int),
        gat_hidden=opts.get("gat_hidden", 512, int),
        mlp_hidden=opts.get("mlp_hidden", 1024, int),
        gat_heads=opts.get("heads", 4, int),
        lr=opts.get("lr", 1e-3, float),
        epochs=opts.get("epochs", 100, int),
        batch_size=opts.get("batch_size", 32, int),
        seed=seed,
    )
    model = GnnModel(config)
    pairs = [(r.graph, r.label) for r in train_records]
    val_pairs = [(r.graph, r.label) for r in test_records]
    started = time.perf_counter()
    result = train(model, pairs, val_data=val_pairs)
    elapsed = time.perf_counter() - started
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_model(model, out_dir / "checkpoint")
    (out_dir / "report.json").write_text(json.dumps(result, indent=1), encoding="utf-8")
    _write_echo(opts, out_dir, {
        "command": "train", "dataset": args.dataset, "split": args.split,
        "seed": seed, "epochs": config.epochs, "lr": config.lr,
        "batch_size": config.batch_size, "heads": config.gat_heads,
        "out_dir": out_dir,
    })
    best = result["best_epoch"]
    print(f"trained {config.epochs} epochs in {elapsed:.1f}s; best epoch {best}")
    return 0


def cmd_init(args) -> int:
    model = load_model(Path(args.checkpoint) / "checkpoint"
                       if (Path(args.checkpoint) / "checkpoint").exists()
                       else args.checkpoint)
    records = load_dataset(args.dataset)
    index = args.index
    if not 0 <= index < len(records):
        raise IndexError(f"record index {index} outside [0, {len(records)})")
    record = records[index]
    params = predict_init(model, record.graph)
    payload = json.dumps({
        "application": record.meta.application.value,
        "index": record.meta.index,
        "params": params.tolist(),
    })
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    return 0


def cmd_eval(args) -> int:
    opts = Options(args)
    seed = opts.seed()
    jobs = opts.get("jobs", 1, int)
    _, _, _, test_records = _load_split_sets(args.dataset, args.split)
    schemes = [Scheme(s.strip()) for s in args.schemes.split(",") if s.strip()]
    cfg = _vqe_config(opts)
    model = None
    if Scheme.GNN in schemes:
        if not args.checkpoint:
            raise CompatibilityError("--checkpoint is required for the gnn scheme")
        ckpt = Path(args.checkpoint)
        model = load_model(ckpt / "checkpoint" if (ckpt / "checkpoint").exists() else ckpt)
    out_dir = Path(args.out_dir) if args.out_dir else default_run_dir("runs", seed)
    results = []
    for scheme in schemes:
        results.append(
            evaluate_scheme(scheme, test_records, cfg, model=model, seed=seed, jobs=jobs)
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    for r in results:
        (out_dir / f"scheme_{r.scheme.value}.json").write_text(
            json.dumps(r.to_dict(), indent=1), encoding="utf-8"
        )
    summary = report(results, out_dir, seed=seed)
    _write_echo(opts, out_dir, {
        "command": "eval", "dataset": args.dataset, "split": args.split,
        "schemes": ",".join(s.value for s in schemes), "seed": seed,
        "lr": cfg.learning_rate, "steps": cfg.max_steps, "jobs": jobs,
        "checkpoint": args.checkpoint or "", "out_dir": out_dir,
    })
    print(summary["table"])
    print(f"artifacts under {out_dir}")
    return 0


def cmd_compare(args) -> int:
    opts = Options(args)
    seed = opts.seed()
    results = []
    for path in args.results:
        results.append(SchemeResult.from_dict(
            json.loads(Path(path).read_text(encoding="utf-8"))
        ))
    out_dir = Path(args.out_dir) if args.out_dir else default_run_dir("runs", seed)
    summary = report(results, out_dir, seed=seed)
    _write_echo(opts, out_dir, {
        "command": "compare", "results": ",".join(map(str, args.results)),
        "seed": seed, "out_dir": out_dir,
    })
    print(summary["table"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qracle",
        description="VQE dataset generation, initializer training, and benchmarking",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None, help="key = value config file")

    p = sub.add_parser("gen-data", help="build a labelled dataset file")
    p.add_argument("--app", required=True, choices=sorted(APP_ALIASES))
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--weight-decay", dest="weight_decay", type=float, default=None)
    p.add_argument("--scheduler", choices=[s.value for s in Scheduler], default=None)
    p.add_argument("--init-mode", dest="init_mode",
                   choices=["per_instance", "shared"], default=None)
    p.add_argument("--jobs", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("split", help="write a 70/30 split manifest")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the initializer network")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--heads", type=int, default=None)
    p.add_argument("--gcn-hidden", dest="gcn_hidden", type=int, default=None)
    p.add_argument("--gat-hidden", dest="gat_hidden", type=int, default=None)
    p.add_argument("--mlp-hidden", dest="mlp_hidden", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("init", help="emit predicted parameters for one graph")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("eval", help="benchmark initialization schemes")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--schemes", default="random,gnn")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--weight-decay", dest="weight_decay", type=float, default=None)
    p.add_argument("--scheduler", choices=[s.value for s in Scheduler], default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out-dir", dest="out_dir", default=None)
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="merge scheme result files into one table")
    p.add_argument("--results", nargs="+", required=True)
    p.add_argument("--out-dir", dest="out_dir", default=None)
    common(p)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, IndexError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
