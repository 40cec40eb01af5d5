"""Post-hoc attack measurements and the rewiring vs add/delete comparison.

Analysis code is allowed to read embeddings and logits of the victim. The
attack path itself only ever sees labels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .classifier import ClassifierModel, predict, relative_embedding_change
from .env import Trajectory
from .errors import DomainError, InvalidInputError
from .graph import TWO_HOP, Graph, apply_rewiring, connected_components, random_add_delete, \
    rewiring_candidates
from .spectral import eigenvalue_change_ratio

KL_EPS = 1e-12


def kl_logits(p_o, p_a, eps: float = KL_EPS) -> float:
    """KL(p_o || p_a) with ``0 log 0 = 0`` and ``p_a`` floored at ``eps``."""
    p_o = np.asarray(p_o, dtype=float)
    p_a = np.asarray(p_a, dtype=float)
    if p_o.shape != p_a.shape or p_o.ndim != 1:
        raise InvalidInputError(f"probability vectors differ in shape: {p_o.shape} vs {p_a.shape}")
    nz = p_o > 0
    q = np.maximum(p_a[nz], eps)
    return float(max(0.0, np.sum(p_o[nz] * (np.log(p_o[nz]) - np.log(q)))))


@dataclass
class AttackAnalysisRecord:
    graph_id: int
    outcome: str
    steps: int
    ratio: float
    rc: float
    kl: float
    components_before: int
    components_after: int
    label_before: int
    label_after: int
    r_lambda: np.ndarray = field(repr=False)

    @property
    def succeeded(self) -> bool:
        return self.label_before != self.label_after

    def row(self) -> dict:
        finite = self.r_lambda[np.isfinite(self.r_lambda)]
        return {
            "graph_id": self.graph_id,
            "outcome": self.outcome,
            "steps": self.steps,
            "ratio": f"{self.ratio:.6g}",
            "rc": f"{self.rc:.6g}",
            "kl": f"{self.kl:.6g}",
            "components_before": self.components_before,
            "components_after": self.components_after,
            "mean_r_lambda": f"{finite.mean():.6g}" if finite.size else "nan",
        }


RECORD_COLUMNS = ("graph_id", "outcome", "steps", "ratio", "rc", "kl", "components_before",
                  "components_after", "mean_r_lambda")


def analyze_attack(g_orig: Graph, trajectory: Trajectory, classifier: ClassifierModel,
                   graph_id: int = 0) -> AttackAnalysisRecord:
    return analyze_pair(g_orig, trajectory.final_graph, trajectory.num_steps, trajectory.outcome,
                        classifier, graph_id)


def analyze_pair(g_orig: Graph, g_att: Graph, steps: int, outcome: str,
                 classifier: ClassifierModel, graph_id: int = 0) -> AttackAnalysisRecord:
    """Measurements for a clean graph and its attacked version after ``steps`` actions."""
    before = predict(g_orig, classifier)
    after = predict(g_att, classifier)
    if steps == 0:
        # identical graphs: skip floating round trips so both measures are exactly 0
        rc = kl = 0.0
    else:
        try:
            rc = relative_embedding_change(before.graph_embedding, after.graph_embedding)
        except DomainError:
            rc = float("nan")  # all-zero clean embedding; keep the rest of the batch
        kl = kl_logits(before.logits, after.logits)
    return AttackAnalysisRecord(
        graph_id=graph_id,
        outcome=outcome,
        steps=steps,
        ratio=steps / g_orig.num_edges if g_orig.num_edges else 0.0,
        rc=rc,
        kl=kl,
        components_before=connected_components(g_orig).count,
        components_after=connected_components(g_att).count,
        label_before=before.label,
        label_after=after.label,
        r_lambda=eigenvalue_change_ratio(g_orig, g_att),
    )


def random_rewirings(g: Graph, count: int, rng: np.random.Generator,
                     mode: str = TWO_HOP) -> tuple[Graph, int]:
    """Apply up to ``count`` uniformly drawn valid rewirings."""
    done = 0
    for _ in range(count):
        cands = rewiring_candidates(g, mode)
        if not cands:
            break
        g = apply_rewiring(g, cands[rng.integers(len(cands))], mode)
        done += 1
    return g, done


@dataclass
class OperatorComparison:
    ratio_per_index: np.ndarray
    mean_rewire_ratio: np.ndarray
    mean_adddel_ratio: np.ndarray
    components_clean: float
    components_rewired: float
    components_adddel: float
    more_disconnected_rewired: float
    more_disconnected_adddel: float
    num_graphs: int

    @property
    def defined(self) -> np.ndarray:
        return self.ratio_per_index[np.isfinite(self.ratio_per_index)]

    @property
    def fraction_above_one(self) -> float:
        d = self.defined
        return float(np.mean(d > 1.0)) if d.size else float("nan")


def _index_means(rows: list[np.ndarray], width: int) -> np.ndarray:
    out = np.full(width, np.nan)
    for i in range(width):
        vals = [r[i] for r in rows if i < len(r) and np.isfinite(r[i])]
        if vals:
            out[i] = float(np.mean(vals))
    return out


def compare_operators(graphs: list[tuple[Graph, int]], rng: np.random.Generator,
                      rewired: list[Graph] | None = None) -> OperatorComparison:
    """Matched-count comparison of rewiring against random edge add/delete.

    ``graphs`` holds ``(g_orig, M)`` pairs.  When ``rewired`` is given it
    supplies the recorded attacked graphs; otherwise ``M`` uniform rewirings
    are drawn.  Either way the add/delete side performs exactly as many
    operations as the rewiring side actually performed.  Indices where
    ``r_re`` averages to 0 or is undefined yield NaN.
    """
    if not graphs:
        raise InvalidInputError("compare_operators needs at least one graph")
    if rewired is not None and len(rewired) != len(graphs):
        raise InvalidInputError("rewired list must align with graphs")
    re_rows, ad_rows = [], []
    clean_c, re_c, ad_c = [], [], []
    width = 0
    for k, (g, m) in enumerate(graphs):
        if m < 0:
            raise InvalidInputError("operation count must be non-negative")
        if m == 0:
            continue
        if rewired is not None:
            g_re, done = rewired[k], m
        else:
            g_re, done = random_rewirings(g, m, rng)
        if done == 0:
            continue
        g_ad, _ = random_add_delete(g, done, rng)
        re_rows.append(eigenvalue_change_ratio(g, g_re))
        ad_rows.append(eigenvalue_change_ratio(g, g_ad))
        clean_c.append(connected_components(g).count)
        re_c.append(connected_components(g_re).count)
        ad_c.append(connected_components(g_ad).count)
        width = max(width, g.num_nodes)
    if not re_rows:
        empty = np.array([])
        nan = float("nan")
        return OperatorComparison(empty, empty, empty, nan, nan, nan, nan, nan, 0)
    mre = _index_means(re_rows, width)
    mad = _index_means(ad_rows, width)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mre > 0, mad / np.where(mre > 0, mre, 1.0), np.nan)
    clean_c, re_c, ad_c = map(np.asarray, (clean_c, re_c, ad_c))
    return OperatorComparison(
        ratio_per_index=ratio,
        mean_rewire_ratio=mre,
        mean_adddel_ratio=mad,
        components_clean=float(clean_c.mean()),
        components_rewired=float(re_c.mean()),
        components_adddel=float(ad_c.mean()),
        more_disconnected_rewired=float(np.mean(re_c > clean_c)),
        more_disconnected_adddel=float(np.mean(ad_c > clean_c)),
        num_graphs=len(re_rows),
    )


def write_records_csv(records: list[AttackAnalysisRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RECORD_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow(r.row())


def write_comparison_csv(cmp: OperatorComparison, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "mean_r_rewire", "mean_r_adddel", "ratio"])
        for i in range(len(cmp.ratio_per_index)):
            w.writerow([i + 1, f"{cmp.mean_rewire_ratio[i]:.6g}", f"{cmp.mean_adddel_ratio[i]:.6g}",
                        f"{cmp.ratio_per_index[i]:.6g}"])
