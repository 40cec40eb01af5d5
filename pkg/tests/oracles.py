"""Independent reference computations used only by the tests."""
from __future__ import annotations

import itertools

import numpy as np

from rewire_attack.graph import Graph


def all_pairs_distances(g: Graph) -> np.ndarray:
    """Floyd-Warshall hop distances; inf for unreachable pairs."""
    n = g.num_nodes
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0)
    for u, v in g.edges:
        d[u, v] = d[v, u] = 1
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d


def brute_force_rewirings(g: Graph) -> list[tuple[int, int, int]]:
    d = all_pairs_distances(g)
    out = []
    for f, s, t in itertools.permutations(range(g.num_nodes), 3):
        if d[f, s] == 1 and d[f, t] == 2:
            out.append((f, s, t))
    return sorted(out)


def pairwise_resistance_total(g: Graph) -> float:
    """Sum over node pairs of effective resistance, via grounded Kirchhoff solves.

    Unit current is injected at ``i`` and extracted at ``j`` on the Laplacian
    with node ``j`` grounded; the potential at ``i`` is the resistance.
    """
    n = g.num_nodes
    lap = np.diag(g.adjacency.sum(1)) - g.adjacency
    total = 0.0
    for i, j in itertools.combinations(range(n), 2):
        keep = [k for k in range(n) if k != j]
        red = lap[np.ix_(keep, keep)]
        rhs = np.zeros(n - 1)
        rhs[keep.index(i)] = 1.0
        pot = np.linalg.solve(red, rhs)
        total += pot[keep.index(i)]
    return total


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, itertools.combinations(range(n), 2))


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def random_graph(rng: np.random.Generator, n: int, p: float, features: int = 1) -> Graph:
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    feats = rng.random((n, features)) if features > 1 else None
    return Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()), feats)


def random_connected_graph(rng: np.random.Generator, n: int, p: float) -> Graph:
    """Random spanning tree plus independent extra edges."""
    perm = rng.permutation(n)
    edges = {tuple(sorted((int(perm[i]), int(perm[rng.integers(i)])))) for i in range(1, n)}
    iu, ju = np.triu_indices(n, 1)
    for u, v in zip(iu, ju):
        if rng.random() < p:
            edges.add((int(u), int(v)))
    return Graph.from_edges(n, edges)


def relative_error(a, b) -> float:
    """Norm-wise relative error.

    The 1e-6 scale floor sits well above central-difference noise (up to ~1e-10 at
    h = 1e-5), so gradients that vanish exactly are compared absolutely.
    """
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-6)
    return float(np.linalg.norm(a - b) / scale)


class ScriptedOracle:
    """Returns ``flip_label`` on the ``flip_at``-th query (1-based), else ``base``."""

    def __init__(self, flip_at=None, base=0, flip_label=1):
        self.flip_at, self.base, self.flip_label = flip_at, base, flip_label
        self.queries = 0

    def __call__(self, g):
        self.queries += 1
        return self.flip_label if self.queries == self.flip_at else self.base
