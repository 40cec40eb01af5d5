"""Dataset ingestion (TU text format), synthetic generation, and splitting."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IntegrityError, InvalidInputError, ParseError
from .graph import Graph

# Upper bounds of the one-hot degree buckets; the last bucket is open-ended.
DEGREE_BUCKETS = (0, 1, 2, 4, 8, 16)
FEATURE_KINDS = ("degree", "constant")

KNOWN_STATS = {
    "REDDIT-MULTI-12K": (11929, 12),
    "REDDIT-MULTI-5K": (4999, 5),
    "IMDB-MULTI": (1500, 3),
}


def degree_features(degrees) -> np.ndarray:
    """One-hot degree buckets 0, 1, 2, 3-4, 5-8, 9-16, 17+."""
    deg = np.asarray(degrees)
    idx = np.searchsorted(np.array(DEGREE_BUCKETS), deg, side="left")
    out = np.zeros((deg.shape[0], len(DEGREE_BUCKETS) + 1))
    out[np.arange(deg.shape[0]), idx] = 1.0
    return out


def node_features(g: Graph, kind: str = "degree") -> np.ndarray:
    if kind == "degree":
        return degree_features(g.degrees)
    if kind == "constant":
        return np.ones((g.num_nodes, 1))
    raise InvalidInputError(f"unknown feature kind {kind!r}; expected one of {FEATURE_KINDS}")


def with_node_features(graphs: list[Graph], kind: str = "degree") -> list[Graph]:
    return [g.with_features(node_features(g, kind)) for g in graphs]


@dataclass(frozen=True)
class SyntheticSpec:
    """Class ``c`` (0-based) plants ``c + 1`` dense communities over a sparse background.

    Every graph has ``community_nodes`` community members regardless of its
    size, split evenly across its communities, so classes differ in how that
    block is partitioned rather than in how large the graph is.

    By default members aim for ``community_degree`` in-community neighbours,
    so the one-community class differs from the two-community class mainly
    in how those neighbours are arranged, not in node degree.  That keeps
    the victim accurate while leaving it reachable by a few rewirings.
    Set ``community_degree=None`` to use a single ``p_in`` instead.
    """

    num_classes: int = 3
    graphs_per_class: int = 100
    min_nodes: int = 20
    max_nodes: int = 30
    community_nodes: int = 18
    p_in: float = 0.8
    p_out: float = 0.03
    features: str = "degree"
    # when set, overrides p_in per community so members expect this many
    # in-community neighbours (capped by community size) whatever the class
    community_degree: float | None = 9.0


def _check_spec(spec: SyntheticSpec) -> None:
    if spec.num_classes < 2 or spec.graphs_per_class < 1:
        raise InvalidInputError("need at least two classes and one graph per class")
    if not 1 <= spec.min_nodes <= spec.max_nodes:
        raise InvalidInputError("invalid node-count range")
    if not (0 <= spec.p_out <= 1 and 0 < spec.p_in <= 1):
        raise InvalidInputError("edge probabilities must lie in [0, 1]")
    if spec.community_nodes > spec.min_nodes:
        raise InvalidInputError("community block larger than the smallest graph")
    if spec.community_nodes // spec.num_classes < 2:
        raise InvalidInputError("too few community nodes for the requested number of classes")
    if spec.community_degree is not None and spec.community_degree <= 0:
        raise InvalidInputError("community_degree must be positive")


def planted_graph(n: int, communities: int, spec: SyntheticSpec,
                  rng: np.random.Generator) -> list[tuple[int, int]]:
    members = spec.community_nodes
    block = np.full(n, -1)
    sizes = [members // communities + (i < members % communities) for i in range(communities)]
    start = 0
    for c, size in enumerate(sizes):
        block[start:start + size] = c
        start += size
    block = block[rng.permutation(n)]
    iu, ju = np.triu_indices(n, k=1)
    same = (block[iu] == block[ju]) & (block[iu] >= 0)
    p_in = np.full(iu.shape[0], spec.p_in)
    if spec.community_degree is not None:
        size = np.asarray(sizes)[np.maximum(block[iu], 0)]
        p_in = np.minimum(1.0, spec.community_degree / np.maximum(size - 1, 1))
    prob = np.where(same, p_in, spec.p_out)
    keep = rng.random(iu.shape[0]) < prob
    return list(zip(iu[keep].tolist(), ju[keep].tolist()))


def gen_synthetic(spec: SyntheticSpec, seed: int) -> list[Graph]:
    _check_spec(spec)
    rng = np.random.default_rng(seed)
    graphs = []
    for label in range(spec.num_classes):
        for _ in range(spec.graphs_per_class):
            n = int(rng.integers(spec.min_nodes, spec.max_nodes + 1))
            edges = planted_graph(n, label + 1, spec, rng)
            g = Graph.from_edges(n, edges, label=label)
            graphs.append(g.with_features(node_features(g, spec.features)))
    return graphs


def split_dataset(graphs: list, a: int, b: int, c: int, seed: int):
    """Seeded shuffle, then contiguous ``a% : b% : c%`` parts."""
    if min(a, b, c) <= 0 or a + b + c != 100:
        raise InvalidInputError(f"split ratios must be positive and sum to 100, got {a}/{b}/{c}")
    order = np.random.default_rng(seed).permutation(len(graphs))
    n = len(graphs)
    n_a = round(n * a / 100)
    n_b = round(n * (a + b) / 100) - n_a
    parts = (order[:n_a], order[n_a:n_a + n_b], order[n_a + n_b:])
    return tuple([graphs[i] for i in part] for part in parts)


# --- TU text format -----------------------------------------------------------

def _read_ints(path: Path, per_line: int) -> list[list[int]]:
    if not path.is_file():
        raise ParseError(path, 0, "file not found")
    rows = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            parts = [p.strip() for p in text.split(",")]
            if len(parts) != per_line:
                raise ParseError(path, lineno, f"expected {per_line} comma-separated values")
            try:
                rows.append([int(p) for p in parts])
            except ValueError:
                raise ParseError(path, lineno, f"not an integer: {text!r}") from None
    return rows


def _find(directory: Path, suffix: str) -> tuple[Path, str]:
    hits = sorted(directory.glob(f"*_{suffix}.txt"))
    if not hits:
        raise ParseError(directory / f"<name>_{suffix}.txt", 0, "file not found")
    name = hits[0].name[: -len(f"_{suffix}.txt")]
    return hits[0], name


def load_tu_dataset(directory, features: str = "degree", validate: bool = True) -> list[Graph]:
    """Read ``<NAME>_A.txt``, ``<NAME>_graph_indicator.txt`` and ``<NAME>_graph_labels.txt``.

    Node ids are remapped to 0-based per-graph indices, labels to ``0..C-1``,
    and each edge is kept once regardless of how many directions are listed.
    When the dataset name is a known benchmark its graph and label counts are
    checked.
    """
    directory = Path(directory)
    a_path, name = _find(directory, "A")
    ind_path = directory / f"{name}_graph_indicator.txt"
    lab_path = directory / f"{name}_graph_labels.txt"
    indicator = [r[0] for r in _read_ints(ind_path, 1)]
    raw_labels = [r[0] for r in _read_ints(lab_path, 1)]
    num_graphs = len(raw_labels)
    if not indicator:
        raise IntegrityError(f"{ind_path}: no nodes")
    ind = np.array(indicator)
    if ind.min() < 1 or ind.max() > num_graphs:
        raise IntegrityError(f"{ind_path}: graph ids outside 1..{num_graphs}")
    if np.any(np.diff(ind) < 0):
        raise IntegrityError(f"{ind_path}: nodes are not grouped by graph")
    first_node = np.searchsorted(ind, np.arange(1, num_graphs + 2))
    edge_sets: list[set] = [set() for _ in range(num_graphs)]
    for lineno, (u, v) in enumerate(_read_ints(a_path, 2), start=1):
        if not (1 <= u <= len(ind) and 1 <= v <= len(ind)):
            raise ParseError(a_path, lineno, f"node id out of range: {u}, {v}")
        gid = ind[u - 1] - 1
        if ind[v - 1] - 1 != gid:
            raise IntegrityError(f"{a_path}:{lineno}: edge joins nodes of different graphs")
        if u == v:
            continue
        lu, lv = u - 1 - first_node[gid], v - 1 - first_node[gid]
        edge_sets[gid].add((min(lu, lv), max(lu, lv)))
    label_ids = {lab: i for i, lab in enumerate(sorted(set(raw_labels)))}
    graphs = []
    for gid in range(num_graphs):
        n = int(first_node[gid + 1] - first_node[gid])
        g = Graph.from_edges(n, sorted(edge_sets[gid]), label=label_ids[raw_labels[gid]])
        graphs.append(g.with_features(node_features(g, features)))
    if validate and name in KNOWN_STATS:
        expected = KNOWN_STATS[name]
        found = (len(graphs), len(label_ids))
        if found != expected:
            raise IntegrityError(f"{name}: expected {expected} (graphs, labels), found {found}")
    return graphs


def write_tu_dataset(graphs: list[Graph], directory, name: str = "SYNTH") -> Path:
    """Write graphs in TU format (1-based ids, both edge directions listed)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    a_lines, ind_lines, lab_lines = [], [], []
    offset = 0
    for gid, g in enumerate(graphs, start=1):
        ind_lines.extend([str(gid)] * g.num_nodes)
        for u, v in g.edges:
            a_lines.append(f"{u + offset + 1}, {v + offset + 1}")
            a_lines.append(f"{v + offset + 1}, {u + offset + 1}")
        lab_lines.append(str(0 if g.label is None else g.label))
        offset += g.num_nodes
    for suffix, lines in (("A", a_lines), ("graph_indicator", ind_lines),
                          ("graph_labels", lab_lines)):
        (directory / f"{name}_{suffix}.txt").write_text("".join(f"{s}\n" for s in lines))
    return directory
