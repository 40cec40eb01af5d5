"""Command-line entry point.

Every command writes into a fresh output directory that is staged under a
temporary name and renamed into place only once all files are written, so a
failed run leaves nothing behind.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import shutil
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (RECORD_COLUMNS, analyze_pair, compare_operators,
                       write_comparison_csv)
from .classifier import ClassifierModel, accuracy
from .config import ExperimentConfig, load_config
from .data import load_tu_dataset, write_tu_dataset
from .errors import ConfigurationError
from .env import variant_config
from .suite import (LEARNED, Prepared, attacker_path, load_graphs, obtain_attacker, prepare,
                    read_episodes_json, replay_episode, run_attack_suite, split_indices, stream,
                    summary_text, write_episodes_csv, write_episodes_json, write_rates_csv)

COMMANDS = ("gen-synth", "train-classifier", "train-attacker", "attack", "analyze",
            "spectral-compare")
DATASET_NAME = "DATA"


class UsageError(Exception):
    pass


def _csv_floats(text: str, kind):
    try:
        return tuple(kind(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated values: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rewire-attack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--dataset", help="TU dataset directory, or 'synthetic'")
        p.add_argument("--out", help="output directory (must not exist)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key; repeatable")
        if name in ("train-attacker", "attack"):
            p.add_argument("--variant", help="comma-separated variants")
            p.add_argument("--budget-p", type=lambda s: _csv_floats(s, float),
                           help="comma-separated budget ratios, e.g. 0.01,0.03")
            p.add_argument("--budget-k", type=lambda s: _csv_floats(s, int),
                           help="comma-separated fixed budgets, e.g. 1,2,3")
        if name in ("train-attacker", "attack", "analyze"):
            p.add_argument("--classifier", help="classifier checkpoint to reuse")
        if name == "attack":
            p.add_argument("--attackers", help="directory of attacker checkpoints to reuse")
        if name in ("analyze", "spectral-compare"):
            p.add_argument("--run", help="output directory of a previous 'attack' run")
        if name == "spectral-compare":
            p.add_argument("--ops", type=int, default=2,
                           help="operations per graph when no --run is given")
            p.add_argument("--include-failed", action="store_true",
                           help="also compare graphs whose ReWatt attack failed")
    return parser


def resolve_config(args) -> ExperimentConfig:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.dataset is not None:
        overrides["dataset"] = args.dataset
    if getattr(args, "variant", None):
        overrides["variants"] = args.variant
    bp, bk = getattr(args, "budget_p", None), getattr(args, "budget_k", None)
    if bp is not None or bk is not None:
        overrides["budgets_p"] = ",".join(map(str, bp or ()))
        overrides["budgets_k"] = ",".join(map(str, bk or ()))
    if getattr(args, "classifier", None):
        overrides["classifier_checkpoint"] = args.classifier
    if getattr(args, "attackers", None):
        overrides["attacker_checkpoint"] = args.attackers
    return load_config(args.config, overrides)


def default_out(command: str, seed: int) -> Path:
    return Path("runs") / f"{time.strftime('%Y%m%d-%H%M%S')}-seed{seed}-{command}"


@contextlib.contextmanager
def staged_output(out: Path):
    """Yield a temporary directory that becomes ``out`` only on success."""
    if out.exists():
        raise UsageError(f"output directory already exists: {out}")
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    tmp.rename(out)


def write_manifest(path: Path, command: str, cfg: ExperimentConfig, extra: dict) -> None:
    doc = {"command": command, "version": __version__, "seed": cfg.seed,
           "config": cfg.to_flat(), **extra}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_split(path: Path, prep: Prepared) -> None:
    path.write_text(json.dumps({"train": prep.train_idx, "attack_train": prep.attack_idx,
                                "test": prep.test_idx}) + "\n")


def write_trace(path: Path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "accuracy"])
        for s in trace:
            w.writerow([s.epoch, f"{s.loss:.6f}", f"{s.accuracy:.6f}"])


def write_curves(path: Path, curves: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variant", "budget", "epoch", "train_success_rate"])
        for (variant, budget), curve in curves.items():
            for e, rate in enumerate(curve, 1):
                w.writerow([variant, budget, e, f"{rate:.6f}"])


# --- commands --------------------------------------------------------------------

def cmd_gen_synth(cfg, args, out: Path) -> str:
    if not cfg.is_synthetic:
        raise UsageError("gen-synth only generates the synthetic dataset")
    graphs = load_graphs(cfg)
    write_tu_dataset(graphs, out / "dataset", DATASET_NAME)
    (out / "config.txt").write_text(cfg.dumps())
    write_manifest(out / "manifest.json", "gen-synth", cfg, {"num_graphs": len(graphs)})
    return f"wrote {len(graphs)} graphs"


def _dataset_copy(out: Path, prep: Prepared) -> None:
    write_tu_dataset(prep.graphs, out / "dataset", DATASET_NAME)
    write_split(out / "split.json", prep)


def cmd_train_classifier(cfg, args, out: Path) -> str:
    if cfg.classifier_checkpoint:
        raise UsageError("train-classifier trains from scratch; drop classifier_checkpoint")
    prep = prepare(cfg)
    prep.classifier.save(out / "classifier.json")
    write_trace(out / "classifier_trace.csv", prep.trace)
    _dataset_copy(out, prep)
    (out / "config.txt").write_text(cfg.dumps())
    held = prep.part(prep.attack_idx + prep.test_idx)
    acc = accuracy(prep.classifier, held)
    write_manifest(out / "manifest.json", "train-classifier", cfg,
                   {"held_out_accuracy": acc, "checkpoint": "classifier.json"})
    return f"held-out accuracy {acc:.4f}"


def cmd_train_attacker(cfg, args, out: Path) -> str:
    prep = prepare(cfg)
    learned = [v for v in cfg.variants if v in LEARNED]
    if not learned:
        raise UsageError(f"train-attacker needs a learned variant among {LEARNED}")
    curves, files = {}, []
    for label, base in cfg.budget_configs():
        for v in learned:
            model, curve = obtain_attacker(replace(cfg, attacker_checkpoint=""), prep, v, label,
                                           variant_config(v, base))
            path = attacker_path(out, v, label)
            model.save(path)
            curves[(v, label)] = curve
            files.append(path.name)
    write_curves(out / "attacker_curves.csv", curves)
    (out / "config.txt").write_text(cfg.dumps())
    write_manifest(out / "manifest.json", "train-attacker", cfg, {"checkpoints": files})
    return f"trained {len(files)} attacker(s)"


def cmd_attack(cfg, args, out: Path) -> str:
    started = time.perf_counter()
    res = run_attack_suite(cfg)
    write_rates_csv(res.report, out / "success_rates.csv")
    write_episodes_csv(res.report, out / "episodes.csv")
    write_episodes_json(res.report, out / "episodes.json")
    write_curves(out / "attacker_curves.csv", res.curves)
    summary = summary_text(res)
    (out / "summary.txt").write_text(summary)
    res.prepared.classifier.save(out / "classifier.json")
    files = []
    for (v, label), model in res.attackers.items():
        path = attacker_path(out, v, label)
        model.save(path)
        files.append(path.name)
    _dataset_copy(out, res.prepared)
    (out / "config.txt").write_text(cfg.dumps())
    write_manifest(out / "manifest.json", "attack", cfg, {
        "classifier": "classifier.json", "attackers": files,
        "test_accuracy": res.test_accuracy,
        "wall_seconds": round(time.perf_counter() - started, 3)})
    return summary.rstrip()


def _load_run(run: Path):
    if run is None:
        raise UsageError("--run is required")
    run = Path(run)
    for name in ("config.txt", "classifier.json", "episodes.json", "split.json"):
        if not (run / name).is_file():
            raise ConfigurationError(f"{run} is not an attack run directory (missing {name})")
    cfg = load_config(run / "config.txt")
    graphs = load_tu_dataset(run / "dataset", cfg.features, validate=False)
    return cfg, graphs, ClassifierModel.load(run / "classifier.json"), \
        read_episodes_json(run / "episodes.json")


def cmd_analyze(cfg, args, out: Path) -> str:
    run_cfg, graphs, clf, episodes = _load_run(args.run)
    if args.classifier:
        clf = ClassifierModel.load(args.classifier)
    records = []
    for rec in episodes:
        if rec.variant not in LEARNED:
            continue
        g = graphs[rec.graph_index]
        records.append((rec, analyze_pair(g, replay_episode(g, rec), rec.steps, rec.outcome, clf,
                                          rec.graph_index)))
    with open(out / "analysis.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("variant", "budget", "repeat") + RECORD_COLUMNS)
        for rec, r in records:
            row = r.row()
            w.writerow([rec.variant, rec.budget, rec.repeat] + [row[c] for c in RECORD_COLUMNS])
    write_manifest(out / "manifest.json", "analyze", run_cfg,
                   {"run": str(args.run), "records": len(records)})
    return f"analysed {len(records)} episodes"


def cmd_spectral_compare(cfg, args, out: Path) -> str:
    if args.run:
        run_cfg, graphs, _, episodes = _load_run(args.run)
        chosen = [e for e in episodes if e.variant == "rewatt" and e.steps > 0
                  and (args.include_failed or e.outcome == "success")]
        pairs = [(graphs[e.graph_index], e.steps) for e in chosen]
        rewired = [replay_episode(graphs[e.graph_index], e) for e in chosen]
        if not pairs:
            raise ConfigurationError("run has no usable ReWatt episodes to compare "
                                     "(try --include-failed)")
        cmp = compare_operators(pairs, stream(run_cfg.seed, "spectral-compare"), rewired)
        seed_cfg = run_cfg
    else:
        if args.ops < 1:
            raise UsageError("--ops must be at least 1")
        graphs = load_graphs(cfg)
        _, _, test = split_indices(cfg, len(graphs))
        pairs = [(graphs[i], args.ops) for i in test]
        cmp = compare_operators(pairs, stream(cfg.seed, "spectral-compare"))
        seed_cfg = cfg
    write_comparison_csv(cmp, out / "eigen_ratio.csv")
    defined = cmp.defined
    summary = {
        "graphs": cmp.num_graphs,
        "components_clean": cmp.components_clean,
        "components_rewired": cmp.components_rewired,
        "components_adddel": cmp.components_adddel,
        "more_disconnected_rewired": cmp.more_disconnected_rewired,
        "more_disconnected_adddel": cmp.more_disconnected_adddel,
        "defined_indices": int(defined.size),
        "fraction_ratio_above_one": cmp.fraction_above_one,
        "median_ratio": float(np.median(defined)) if defined.size else float("nan"),
    }
    with open(out / "components.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(summary.keys())
        w.writerow([f"{v:.6g}" if isinstance(v, float) else v for v in summary.values()])
    write_manifest(out / "manifest.json", "spectral-compare", seed_cfg,
                   {"run": str(args.run) if args.run else None})
    return "\n".join(f"{k}: {v:.4g}" if isinstance(v, float) else f"{k}: {v}"
                     for k, v in summary.items())


HANDLERS = {
    "gen-synth": cmd_gen_synth,
    "train-classifier": cmd_train_classifier,
    "train-attacker": cmd_train_attacker,
    "attack": cmd_attack,
    "analyze": cmd_analyze,
    "spectral-compare": cmd_spectral_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(args.out) if args.out else default_out(args.command, cfg.seed)
        with staged_output(out) as tmp:
            message = HANDLERS[args.command](cfg, args, tmp)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(message)
    print(f"output: {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
