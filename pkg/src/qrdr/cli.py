"""Experiment runner: one binary, six subcommands.

    reduce      run the resonant reduction once and report fidelity metrics
    sweep-c     trace infidelity against the coupling and fit the error law
    qsvm        LS-SVM cross-validation on raw and rank-reduced features
    tfim-gen    generate the Ising phase dataset (JSON lines)
    qcnn-train  train the quantum/classical classifier arms
    verify      run the cross-module invariant battery

Reports are JSON with sorted keys plus CSV side files, and contain no
volatile fields: rerunning any experiment with the same config and seed
reproduces the report byte for byte (wall-clock timing goes to stderr
only).  Flag precedence is flag > config file > built-in default.  Exit
codes: 0 success, 1 configuration/validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dataset as dataset_mod
from . import qcnn, resonance, svm, tfim
from .engine import run_qrdr
from .pca import fit_pca, project

DEFAULT_SEED = 7


class ConfigError(Exception):
    """Invalid configuration; maps to exit code 1."""


@dataclass
class ExperimentConfig:
    command: str
    values: dict
    out_dir: Path
    seed: int
    threads: int

    def __getitem__(self, key):
        return self.values[key]


@dataclass
class ReportRecord:
    experiment: str
    config: dict
    metrics: dict
    artifacts: dict = field(default_factory=dict)
    timestamp: str = ""

    def to_json_obj(self) -> dict:
        # the timestamp is deliberately excluded: reports must be
        # byte-identical across reruns of the same config and seed
        return {
            "experiment": self.experiment,
            "config": self.config,
            "metrics": self.metrics,
            "artifacts": self.artifacts,
        }


def emit_report(record: ReportRecord, path) -> None:
    text = json.dumps(record.to_json_obj(), sort_keys=True, indent=2)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text + "\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit 2; we reserve 2 for failed runs
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _int_list(text: str):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")


# built-in defaults, applied after config-file values (flags win over both)
_DEFAULTS = {
    "reduce": {"dataset": None, "r": 16, "c": 0.004, "path": "blockwise"},
    "sweep-c": {"dataset": None, "r": 16,
                "c_grid": list(resonance.DEFAULT_C_GRID), "path": "blockwise"},
    "qsvm": {"dataset": None, "r": 16, "folds": 8, "arm": "both",
             "gammas": list(svm.GAMMA_GRID)},
    "tfim-gen": {"n_sites": 8, "count": 200, "j": 1.0,
                 "ratio_range": [0.2, 1.8], "exclusion": [0.95, 1.05],
                 "out_file": None},
    "qcnn-train": {"data": None, "r": 16, "arms": "qcnn+qrdr,qcnn,mlp+dr,mlp",
                   "seeds": None, "epochs": 20, "batch_size": 20, "lr": 0.01,
                   "gradient": "fd"},
    "verify": {},
}


def build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="base random seed (default 7)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker thread bound (default QRDR_THREADS or 1)")
    common.add_argument("--config", type=str, default=None,
                        help="JSON file with default flag values")
    common.add_argument("--out", type=str, default=None,
                        help="output directory for reports (default .)")

    parser = _Parser(prog="qrdr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", parents=[common],
                       help="run the resonant reduction once")
    p.add_argument("--dataset", type=str, default=None)
    p.add_argument("--r", type=int, default=None, help="target rank R")
    p.add_argument("--c", type=float, default=None, help="resonant coupling")
    p.add_argument("--path", choices=("blockwise", "full"), default=None)

    p = sub.add_parser("sweep-c", parents=[common],
                       help="infidelity across a coupling grid")
    p.add_argument("--dataset", type=str, default=None)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--c-grid", dest="c_grid", type=_float_list, default=None)
    p.add_argument("--path", choices=("blockwise", "full"), default=None)

    p = sub.add_parser("qsvm", parents=[common],
                       help="LS-SVM cross-validation")
    p.add_argument("--dataset", type=str, default=None)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--arm", choices=("raw", "reduced", "both"), default=None)
    p.add_argument("--gammas", type=_float_list, default=None)

    p = sub.add_parser("tfim-gen", parents=[common],
                       help="generate the Ising phase dataset")
    p.add_argument("--n-sites", dest="n_sites", type=int, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--j", type=float, default=None)
    p.add_argument("--ratio-range", dest="ratio_range", type=_float_list,
                   default=None)
    p.add_argument("--exclusion", type=_float_list, default=None)
    p.add_argument("--out-file", dest="out_file", type=str, default=None)

    p = sub.add_parser("qcnn-train", parents=[common],
                       help="train classifier arms on the phase dataset")
    p.add_argument("--data", type=str, default=None,
                   help="phase dataset JSONL (generated in memory if omitted)")
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--arms", type=str, default=None,
                   help="comma list from qcnn+qrdr,qcnn,mlp+dr,mlp")
    p.add_argument("--seeds", type=_int_list, default=None,
                   help="comma list of training seeds (default: the base seed)")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--gradient", choices=("fd", "parameter-shift"), default=None)

    sub.add_parser("verify", parents=[common],
                   help="run the invariant battery")
    return parser


def parse_config(argv) -> ExperimentConfig:
    """Parse flags, merge config-file defaults, validate ranges."""
    ns = build_parser().parse_args(argv)
    command = ns.command
    file_values = {}
    if ns.config is not None:
        cfg_path = Path(ns.config)
        if not cfg_path.is_file():
            raise ConfigError(f"config: file not found: {cfg_path}")
        try:
            file_values = json.loads(cfg_path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigError("config: top level must be a JSON object")

    def resolve(key, fallback):
        flag = getattr(ns, key, None)
        if flag is not None:
            return flag
        if key in file_values:
            return file_values[key]
        return fallback

    values = {key: resolve(key, default)
              for key, default in _DEFAULTS[command].items()}
    seed = resolve("seed", DEFAULT_SEED)
    out_dir = Path(resolve("out", "."))
    threads = resolve("threads", None)
    if threads is None:
        threads = int(os.environ.get("QRDR_THREADS", "1"))
    if threads < 1:
        raise ConfigError(f"threads: must be >= 1, got {threads}")

    if "r" in values and values["r"] is not None and values["r"] < 1:
        raise ConfigError(f"r: rank must be >= 1, got {values['r']}")
    if "folds" in values and values["folds"] < 2:
        raise ConfigError(f"folds: need at least 2, got {values['folds']}")
    if "dataset" in values:
        if values["dataset"] is None:
            values["dataset"] = str(dataset_mod.sonar_path())
        elif not Path(values["dataset"]).is_file():
            raise ConfigError(f"dataset: file not found: {values['dataset']}")
    if command == "qcnn-train":
        if values["data"] is not None and not Path(values["data"]).is_file():
            raise ConfigError(f"data: file not found: {values['data']}")
        if values["seeds"] is None:
            values["seeds"] = [seed]
        known = {"qcnn+qrdr", "qcnn", "mlp+dr", "mlp"}
        arms = [a.strip() for a in values["arms"].split(",") if a.strip()]
        bad = set(arms) - known
        if bad:
            raise ConfigError(f"arms: unknown arm(s) {sorted(bad)}")
        values["arms"] = arms
    return ExperimentConfig(command=command, values=values, out_dir=out_dir,
                            seed=seed, threads=threads)


def _bounded_map(fn, items, threads: int):
    """Order-preserving map over independent work items."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _config_echo(cfg: ExperimentConfig) -> dict:
    echo = {"command": cfg.command, "seed": cfg.seed, "threads": cfg.threads}
    for key, val in cfg.values.items():
        echo[key] = str(val) if isinstance(val, Path) else val
    return echo


# ---------------------------------------------------------------------------
# experiment runners


def _run_reduce(cfg: ExperimentConfig) -> ReportRecord:
    ds = dataset_mod.load_sonar(cfg["dataset"])
    out = run_qrdr(ds.features, cfg["r"], cfg["c"], path=cfg["path"])
    return ReportRecord("reduce", _config_echo(cfg), out.to_metrics())


def _run_sweep(cfg: ExperimentConfig) -> ReportRecord:
    ds = dataset_mod.load_sonar(cfg["dataset"])
    result = resonance.sweep_c(ds.features, cfg["r"], cfg["c_grid"],
                               path=cfg["path"])
    csv_path = cfg.out_dir / f"sweep_c_r{cfg['r']}.csv"
    result.write_csv(csv_path)
    return ReportRecord("sweep-c", _config_echo(cfg), result.to_metrics(),
                        artifacts={"sweep_csv": csv_path.name})


def _run_qsvm(cfg: ExperimentConfig) -> ReportRecord:
    ds = dataset_mod.load_sonar(cfg["dataset"])
    metrics = {}
    gammas = tuple(cfg["gammas"])
    if cfg["arm"] in ("raw", "both"):
        res = svm.cross_validate(ds.features, ds.labels, k=cfg["folds"],
                                 seed=cfg.seed, gammas=gammas)
        metrics["raw"] = res.to_metrics()
    if cfg["arm"] in ("reduced", "both"):
        reduced = svm.reduced_features(ds.features, cfg["r"])
        res = svm.cross_validate(reduced, ds.labels, k=cfg["folds"],
                                 seed=cfg.seed, gammas=gammas)
        metrics["reduced"] = res.to_metrics()
    return ReportRecord("qsvm", _config_echo(cfg), metrics)


def _run_tfim_gen(cfg: ExperimentConfig) -> ReportRecord:
    ds = tfim.generate_dataset(
        n_sites=cfg["n_sites"], count=cfg["count"], seed=cfg.seed,
        ratio_range=tuple(cfg["ratio_range"]),
        exclusion=tuple(cfg["exclusion"]), J=cfg["j"],
    )
    out_file = cfg["out_file"]
    path = Path(out_file) if out_file else tfim.default_dataset_path(cfg.out_dir)
    tfim.save_dataset(path, ds)
    metrics = {
        "count": ds.count,
        "n_sites": ds.n_sites,
        "paramagnetic": int(np.sum(ds.labels == 1)),
        "ferromagnetic": int(np.sum(ds.labels == -1)),
        "ratio_min": float(ds.ratios.min()),
        "ratio_max": float(ds.ratios.max()),
    }
    return ReportRecord("tfim-gen", _config_echo(cfg), metrics,
                        artifacts={"dataset": path.name})


def _phase_features(ds: tfim.TfimDataset, rank: int):
    """Input vectors per arm: unit rows, reduced or raw."""
    X = ds.features
    Z = project(X, fit_pca(X, rank))
    Z = Z / np.linalg.norm(Z, axis=1, keepdims=True)
    return {"reduced": Z, "raw": X}


def _run_qcnn_train(cfg: ExperimentConfig) -> ReportRecord:
    if cfg["data"] is not None:
        ds = tfim.load_dataset(cfg["data"])
    else:
        ds = tfim.generate_dataset(seed=cfg.seed)
    rank = cfg["r"]
    r_reduced = int(np.log2(rank))
    if 2 ** r_reduced != rank or r_reduced % 2:
        raise ConfigError(
            f"r: rank {rank} does not map to an even reduced register"
        )
    n_sites = ds.n_sites
    if n_sites % 2:
        raise ConfigError(f"data: odd register of {n_sites} qubits unsupported")
    feats = _phase_features(ds, rank)
    labels = ds.labels

    def run_one(job):
        arm, seed = job
        train_idx, test_idx = dataset_mod.holdout_split(
            ds.count, max(1, ds.count // 5), seed)
        use = feats["reduced"] if arm in ("qcnn+qrdr", "mlp+dr") else feats["raw"]
        split = qcnn.SplitData(use[train_idx], labels[train_idx],
                               use[test_idx], labels[test_idx])
        tcfg = qcnn.TrainConfig(
            learning_rate=cfg["lr"], batch_size=cfg["batch_size"],
            epochs=cfg["epochs"], seed=seed, gradient=cfg["gradient"],
        )
        if arm.startswith("qcnn"):
            r = r_reduced if arm == "qcnn+qrdr" else n_sites
            model = qcnn.QcnnModel.initial(r, seed)
            result = qcnn.train(model, split, tcfg)
            checkpoint = model.with_params(result.final_params).to_json_obj()
        else:
            result = qcnn.mlp_baseline(split, tcfg)
            checkpoint = {"kind": "mlp",
                          "params": [float(p) for p in result.final_params]}
        return arm, seed, result, checkpoint

    jobs = [(arm, seed) for arm in cfg["arms"] for seed in cfg["seeds"]]
    outputs = _bounded_map(run_one, jobs, cfg.threads)

    metrics = {}
    artifacts = {}
    for arm, seed, result, checkpoint in outputs:
        tag = f"{arm.replace('+', '_')}_s{seed}"
        hist_path = cfg.out_dir / f"history_{tag}.csv"
        result.write_csv(hist_path)
        ckpt_path = cfg.out_dir / f"model_{tag}.json"
        with open(ckpt_path, "w", encoding="ascii") as fh:
            fh.write(json.dumps(checkpoint, sort_keys=True) + "\n")
        artifacts[f"history_{tag}"] = hist_path.name
        artifacts[f"model_{tag}"] = ckpt_path.name
        metrics.setdefault(arm, {})[str(seed)] = {
            "final_train_acc": result.final["train_acc"],
            "final_test_acc": result.final["test_acc"],
            "final_test_loss": result.final["test_loss"],
        }
    for arm in cfg["arms"]:
        per_seed = metrics[arm]
        metrics[arm]["mean_final_test_acc"] = float(np.mean(
            [per_seed[str(s)]["final_test_acc"] for s in cfg["seeds"]]
        ))
    return ReportRecord("qcnn-train", _config_echo(cfg), metrics,
                        artifacts=artifacts)


def _run_verify(cfg: ExperimentConfig) -> ReportRecord:
    from .verify import run_invariants

    results = run_invariants()
    failed = [name for name, ok, _ in results if not ok]
    for name, ok, detail in results:
        line = f"{'ok  ' if ok else 'FAIL'}  {name}"
        if detail and not ok:
            line += f"  ({detail})"
        print(line)
    if failed:
        raise RuntimeError(f"{len(failed)} invariant check(s) failed: "
                           + ", ".join(failed))
    return ReportRecord("verify", _config_echo(cfg),
                        {"checks": len(results), "failed": 0})


_RUNNERS = {
    "reduce": _run_reduce,
    "sweep-c": _run_sweep,
    "qsvm": _run_qsvm,
    "tfim-gen": _run_tfim_gen,
    "qcnn-train": _run_qcnn_train,
    "verify": _run_verify,
}


def run_experiment(cfg: ExperimentConfig) -> ReportRecord:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    record = _RUNNERS[cfg.command](cfg)
    record.timestamp = time.strftime("%Y-%m-%dT%H:%M:%S")
    report_path = cfg.out_dir / f"report_{cfg.command.replace('-', '_')}.json"
    emit_report(record, report_path)
    print(f"[{record.timestamp}] wrote {report_path}", file=sys.stderr)
    return record


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"qrdr: error: {exc}", file=sys.stderr)
        return 1
    try:
        run_experiment(cfg)
    except ConfigError as exc:
        print(f"qrdr: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure in a pipeline stage
        print(f"qrdr: {cfg.command} failed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
