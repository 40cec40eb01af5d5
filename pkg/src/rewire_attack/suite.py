"""Experiment pipeline: data, splits, victim, attackers, success-rate tables.

Every random stream is derived from the master seed and a stream name, so
adding a variant or a budget never shifts the randomness of the others.
"""
from __future__ import annotations

import csv
import json
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .classifier import ClassifierModel, LabelOracle, accuracy, predict, train_classifier
from .config import ExperimentConfig
from .data import gen_synthetic, load_tu_dataset, split_dataset, with_node_features
from .env import (BUDGET_EXHAUSTED, NO_VALID_ACTION, SUCCESS, Trajectory, random_attack,
                  random_s_attack, variant_config)
from .errors import ConfigurationError
from .graph import Graph, RewiringAction, apply_rewiring
from .policy import PolicyModel, rewatt_attack, train_attacker

LEARNED = ("rewatt", "rewatt-a", "rewatt-n")
RATE_COLUMNS = ("variant", "budget", "succeeded", "failed", "no_action", "total", "success_rate")
EPISODE_COLUMNS = ("variant", "budget", "graph_index", "repeat", "outcome", "steps", "budget_k",
                   "queries")


def stream_seed(master: int, *names) -> np.random.SeedSequence:
    tags = [zlib.crc32(str(n).encode()) for n in names]
    return np.random.SeedSequence([int(master), *tags])


def stream(master: int, *names) -> np.random.Generator:
    return np.random.default_rng(stream_seed(master, *names))


def stream_int(master: int, *names) -> int:
    return int(stream_seed(master, *names).generate_state(1)[0])


def budget_slug(label: str) -> str:
    return label.replace("=", "")


# --- preparation ---------------------------------------------------------------

def load_graphs(cfg: ExperimentConfig) -> list[Graph]:
    if cfg.is_synthetic:
        spec = replace(cfg.synthetic, features=cfg.features)
        return gen_synthetic(spec, stream_int(cfg.seed, "data"))
    return with_node_features(load_tu_dataset(cfg.dataset, cfg.features), cfg.features)


@dataclass
class Prepared:
    graphs: list[Graph]
    train_idx: list[int]
    attack_idx: list[int]
    test_idx: list[int]
    classifier: ClassifierModel
    trace: list = field(default_factory=list)

    def part(self, idx: list[int]) -> list[Graph]:
        return [self.graphs[i] for i in idx]


def split_indices(cfg: ExperimentConfig, n: int) -> tuple[list[int], list[int], list[int]]:
    parts = split_dataset(list(range(n)), cfg.split_a, cfg.split_b, cfg.split_c,
                          stream_int(cfg.seed, "split"))
    return tuple([int(i) for i in p] for p in parts)


def prepare(cfg: ExperimentConfig, graphs: list[Graph] | None = None) -> Prepared:
    """Load data, split it, then train or load the victim."""
    graphs = load_graphs(cfg) if graphs is None else graphs
    tr, at, te = split_indices(cfg, len(graphs))
    if not te:
        raise ConfigurationError("test split is empty; use more graphs or a larger split_c")
    trace = []
    if cfg.classifier_checkpoint:
        path = Path(cfg.classifier_checkpoint)
        if not path.is_file():
            raise ConfigurationError(f"classifier checkpoint not found: {path}")
        model = ClassifierModel.load(path)
    else:
        num_classes = len({g.label for g in graphs})
        res = train_classifier([graphs[i] for i in tr], cfg.classifier,
                               stream(cfg.seed, "classifier"), num_classes=num_classes)
        model, trace = res.model, res.trace
    return Prepared(graphs, tr, at, te, model, trace)


def attacker_path(directory, variant: str, budget_label: str) -> Path:
    return Path(directory) / f"attacker_{variant}_{budget_slug(budget_label)}.json"


def obtain_attacker(cfg: ExperimentConfig, prep: Prepared, variant: str, budget_label: str,
                    attack_cfg) -> tuple[PolicyModel, list[float]]:
    if cfg.attacker_checkpoint:
        path = attacker_path(cfg.attacker_checkpoint, variant, budget_label)
        if not path.is_file():
            raise ConfigurationError(f"attacker checkpoint not found: {path}")
        return PolicyModel.load(path), []
    graphs = prep.part(prep.attack_idx)
    labels = [predict(g, prep.classifier).label for g in graphs]
    res = train_attacker(graphs, LabelOracle(prep.classifier), attack_cfg, cfg.attacker,
                         stream(cfg.seed, "train-attacker", variant, budget_label), labels)
    return res.model, res.success_curve


# --- evaluation ----------------------------------------------------------------

@dataclass
class EpisodeRecord:
    variant: str
    budget: str
    graph_index: int
    repeat: int
    outcome: str
    steps: int
    budget_k: int
    queries: int
    actions: list[tuple[int, int, int]]

    @property
    def succeeded(self) -> bool:
        return self.outcome == SUCCESS

    @classmethod
    def from_trajectory(cls, variant, budget, graph_index, repeat, t: Trajectory):
        return cls(variant, budget, graph_index, repeat, t.outcome, t.num_steps, t.budget,
                   t.queries, [a.as_tuple() for a in t.actions])


@dataclass
class RateRow:
    variant: str
    budget: str
    succeeded: int
    failed: int
    no_action: int

    @property
    def total(self) -> int:
        return self.succeeded + self.failed + self.no_action

    @property
    def rate(self) -> float:
        return self.succeeded / self.total if self.total else 0.0


@dataclass
class SuccessRateReport:
    rows: list[RateRow]
    episodes: list[EpisodeRecord]

    def rate(self, variant: str, budget: str) -> float:
        for r in self.rows:
            if r.variant == variant and r.budget == budget:
                return r.rate
        raise KeyError((variant, budget))


@dataclass
class SuiteResult:
    config: ExperimentConfig
    prepared: Prepared
    report: SuccessRateReport
    attackers: dict[tuple[str, str], PolicyModel]
    curves: dict[tuple[str, str], list[float]]
    test_accuracy: float


def _tally(variant: str, budget: str, recs: list[EpisodeRecord]) -> RateRow:
    return RateRow(variant, budget,
                   sum(r.outcome == SUCCESS for r in recs),
                   sum(r.outcome == BUDGET_EXHAUSTED for r in recs),
                   sum(r.outcome == NO_VALID_ACTION for r in recs))


def run_attack_suite(cfg: ExperimentConfig, prepared: Prepared | None = None) -> SuiteResult:
    """Evaluate every requested variant at every requested budget on the test split.

    Random-s needs recorded ReWatt step counts, so ReWatt is run whenever
    Random-s is requested, even if ReWatt itself was not listed.
    """
    prep = prepared or prepare(cfg)
    oracle = LabelOracle(prep.classifier)
    test = [(i, prep.graphs[i]) for i in prep.test_idx]
    clean_labels = {i: predict(g, prep.classifier).label for i, g in test}
    wanted = list(cfg.variants)
    run_order = [v for v in LEARNED if v in wanted or (v == "rewatt" and "random-s" in wanted)]
    run_order += [v for v in ("random", "random-s") if v in wanted]

    rows, episodes, attackers, curves = [], [], {}, {}
    for budget_label, base in cfg.budget_configs():
        recorded: dict[tuple[int, int], int] = {}
        for variant in run_order:
            vcfg = variant_config(variant, base)
            rng = stream(cfg.seed, "eval", variant, budget_label)
            if variant in LEARNED:
                model, curve = obtain_attacker(cfg, prep, variant, budget_label, vcfg)
                attackers[(variant, budget_label)] = model
                curves[(variant, budget_label)] = curve
            recs = []
            for i, g in test:
                for r in range(cfg.eval_repeats):
                    y = clean_labels[i]
                    if variant in LEARNED:
                        t = rewatt_attack(g, oracle, model, vcfg, rng, y)
                        if variant == "rewatt":
                            recorded[(i, r)] = t.num_steps
                    elif variant == "random":
                        t = random_attack(g, oracle, vcfg, rng, y)
                    else:
                        t = random_s_attack(g, oracle, recorded[(i, r)], rng, y, vcfg)
                    recs.append(EpisodeRecord.from_trajectory(variant, budget_label, i, r, t))
            episodes.extend(recs)
            if variant in wanted:
                rows.append(_tally(variant, budget_label, recs))
    test_acc = accuracy(prep.classifier, [g for _, g in test])
    return SuiteResult(cfg, prep, SuccessRateReport(rows, episodes), attackers, curves, test_acc)


def replay_episode(g: Graph, rec: EpisodeRecord) -> Graph:
    """Rebuild the attacked graph from a recorded action list."""
    mode = variant_config(rec.variant).third_node_mode
    for a in rec.actions:
        g = apply_rewiring(g, RewiringAction(*a), mode)
    return g


# --- persistence ---------------------------------------------------------------

def write_rates_csv(report: SuccessRateReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATE_COLUMNS)
        for r in report.rows:
            w.writerow([r.variant, r.budget, r.succeeded, r.failed, r.no_action, r.total,
                        f"{r.rate:.6f}"])


def write_episodes_csv(report: SuccessRateReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EPISODE_COLUMNS)
        for e in report.episodes:
            w.writerow([e.variant, e.budget, e.graph_index, e.repeat, e.outcome, e.steps,
                        e.budget_k, e.queries])


def write_episodes_json(report: SuccessRateReport, path) -> None:
    doc = [{"variant": e.variant, "budget": e.budget, "graph_index": e.graph_index,
            "repeat": e.repeat, "outcome": e.outcome, "budget_k": e.budget_k,
            "queries": e.queries, "actions": [list(a) for a in e.actions]}
           for e in report.episodes]
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_episodes_json(path) -> list[EpisodeRecord]:
    try:
        doc = json.loads(Path(path).read_text())
        return [EpisodeRecord(d["variant"], d["budget"], int(d["graph_index"]), int(d["repeat"]),
                              d["outcome"], len(d["actions"]), int(d["budget_k"]),
                              int(d["queries"]), [tuple(a) for a in d["actions"]])
                for d in doc]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigurationError(f"cannot read episode log {path}: {exc}") from exc


def summary_text(res: SuiteResult) -> str:
    lines = [f"test graphs: {len(res.prepared.test_idx)} x {res.config.eval_repeats} repeats",
             f"victim test accuracy: {res.test_accuracy:.4f}"]
    for r in res.report.rows:
        lines.append(f"{r.variant:9s} {r.budget:7s} {r.succeeded:5d}/{r.total:<5d} "
                     f"rate {r.rate:.4f}")
    return "\n".join(lines) + "\n"
