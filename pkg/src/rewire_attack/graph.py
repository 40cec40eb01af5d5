"""Undirected simple graphs and the three-node rewiring operation.

A rewiring ``(fir, sec, thi)`` deletes edge ``(fir, sec)`` and adds edge
``(fir, thi)``, where ``thi`` sits at shortest-path distance exactly two from
``fir``.  Node, edge and degree totals are preserved by construction.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

from .errors import InvalidInputError, RejectedActionError

TWO_HOP = "two_hop"
ANY_NODE = "any_node"
THIRD_NODE_MODES = (TWO_HOP, ANY_NODE)

Edge = tuple[int, int]


def _canonical(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable graph value.  ``edges`` is a sorted tuple of ``(i, j)`` with ``i < j``."""

    num_nodes: int
    edges: tuple[Edge, ...]
    features: np.ndarray = field(repr=False)
    label: int | None = None

    @classmethod
    def from_edges(cls, num_nodes: int, edges: Iterable[tuple[int, int]], features=None,
                   label: int | None = None) -> "Graph":
        if num_nodes < 0:
            raise InvalidInputError("num_nodes must be non-negative")
        canon = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise InvalidInputError(f"edge ({u}, {v}) out of range for {num_nodes} nodes")
            if u == v:
                raise InvalidInputError(f"self-loop at node {u}")
            e = _canonical(u, v)
            if e in canon:
                raise InvalidInputError(f"duplicate edge {e}")
            canon.add(e)
        if features is None:
            features = np.ones((num_nodes, 1))
        features = np.array(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != num_nodes:
            raise InvalidInputError(
                f"feature matrix shape {features.shape} does not match {num_nodes} nodes")
        features.setflags(write=False)
        return cls(num_nodes, tuple(sorted(canon)), features, label)

    def with_edges(self, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Same nodes, features and label; new edge set."""
        return Graph.from_edges(self.num_nodes, edges, self.features, self.label)

    def with_label(self, label: int | None) -> "Graph":
        return Graph(self.num_nodes, self.edges, self.features, label)

    def with_features(self, features) -> "Graph":
        return Graph.from_edges(self.num_nodes, self.edges, features, self.label)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(self.edges)

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.num_nodes, self.num_nodes))
        if self.edges:
            e = np.array(self.edges)
            a[e[:, 0], e[:, 1]] = 1.0
            a[e[:, 1], e[:, 0]] = 1.0
        a.setflags(write=False)
        return a

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @cached_property
    def neighbor_lists(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(n)) for n in nbrs)

    @cached_property
    def two_hop(self) -> np.ndarray:
        """Boolean matrix: ``[u, v]`` iff v is at shortest-path distance exactly 2 from u."""
        a = self.adjacency > 0
        reach = (self.adjacency @ self.adjacency) > 0
        out = reach & ~a
        np.fill_diagonal(out, False)
        out.setflags(write=False)
        return out

    def has_edge(self, u: int, v: int) -> bool:
        return _canonical(u, v) in self.edge_set

    def same_structure(self, other: "Graph") -> bool:
        return self.num_nodes == other.num_nodes and self.edges == other.edges

    def permuted(self, perm) -> "Graph":
        """Relabel node ``i`` as ``perm[i]``."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        feats = self.features[inv]
        return Graph.from_edges(self.num_nodes, [(perm[u], perm[v]) for u, v in self.edges],
                                feats, self.label)


@dataclass(frozen=True, order=True)
class RewiringAction:
    fir: int
    sec: int
    thi: int

    def __post_init__(self):
        if len({self.fir, self.sec, self.thi}) != 3:
            raise InvalidInputError(f"rewiring nodes must be distinct: {self}")
        if min(self.fir, self.sec, self.thi) < 0:
            raise InvalidInputError(f"negative node id in {self}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.fir, self.sec, self.thi)


def _check_node(g: Graph, v: int) -> None:
    if not 0 <= v < g.num_nodes:
        raise InvalidInputError(f"node {v} out of range for {g.num_nodes} nodes")


def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Hop distances from ``source``; -1 marks unreachable nodes."""
    _check_node(g, source)
    dist = np.full(g.num_nodes, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    nbrs = g.neighbor_lists
    while queue:
        u = queue.popleft()
        for w in nbrs[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def k_hop_neighbors(g: Graph, v: int, k: int) -> set[int]:
    """Nodes at shortest-path distance exactly ``k`` from ``v``."""
    if k < 1:
        raise InvalidInputError("k must be at least 1")
    dist = bfs_distances(g, v)
    return {int(u) for u in np.flatnonzero(dist == k)}


def third_node_candidates(g: Graph, fir: int, mode: str = TWO_HOP) -> np.ndarray:
    """Sorted node ids admissible as ``thi`` once ``fir`` is chosen."""
    _check_node(g, fir)
    if mode == TWO_HOP:
        return np.flatnonzero(g.two_hop[fir])
    if mode == ANY_NODE:
        mask = g.adjacency[fir] == 0
        mask[fir] = False
        return np.flatnonzero(mask)
    raise InvalidInputError(f"unknown third-node mode {mode!r}")


def is_valid_rewiring(g: Graph, a: RewiringAction, mode: str = TWO_HOP) -> bool:
    for v in a.as_tuple():
        _check_node(g, v)
    if not g.has_edge(a.fir, a.sec):
        return False
    if mode == TWO_HOP:
        return bool(g.two_hop[a.fir, a.thi])
    if mode == ANY_NODE:
        return not g.has_edge(a.fir, a.thi)
    raise InvalidInputError(f"unknown third-node mode {mode!r}")


def rewiring_candidates(g: Graph, mode: str = TWO_HOP) -> list[RewiringAction]:
    """Every valid rewiring on ``g``, sorted by (fir, sec, thi)."""
    out = []
    nbrs = g.neighbor_lists
    for fir in range(g.num_nodes):
        if not nbrs[fir]:
            continue
        thirds = third_node_candidates(g, fir, mode)
        if thirds.size == 0:
            continue
        for sec in nbrs[fir]:
            out.extend(RewiringAction(fir, sec, int(t)) for t in thirds)
    return out


def apply_rewiring(g: Graph, a: RewiringAction, mode: str = TWO_HOP) -> Graph:
    """Return a new graph with ``(fir, sec)`` removed and ``(fir, thi)`` added."""
    if not is_valid_rewiring(g, a, mode):
        raise RejectedActionError(f"{a} is not a valid rewiring ({mode})")
    edges = set(g.edges)
    edges.remove(_canonical(a.fir, a.sec))
    edges.add(_canonical(a.fir, a.thi))
    return g.with_edges(edges)


class Components(NamedTuple):
    count: int
    partition: list[list[int]]


def connected_components(g: Graph) -> Components:
    seen = np.zeros(g.num_nodes, dtype=bool)
    parts = []
    nbrs = g.neighbor_lists
    for start in range(g.num_nodes):
        if seen[start]:
            continue
        seen[start] = True
        comp = [start]
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in nbrs[u]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    queue.append(w)
        parts.append(sorted(comp))
    return Components(len(parts), parts)


def random_add_delete(g: Graph, count: int, rng: np.random.Generator) -> tuple[Graph, int]:
    """Apply ``count`` random single-edge deletions or additions.

    Each operation picks delete or add with equal probability, falling back to
    the other kind when the drawn one is impossible.  Returns the new graph and
    the number of operations actually performed.
    """
    if count < 0:
        raise InvalidInputError("count must be non-negative")
    n = g.num_nodes
    edges = set(g.edges)
    max_edges = n * (n - 1) // 2
    done = 0
    for _ in range(count):
        can_delete = len(edges) > 0
        can_add = len(edges) < max_edges
        if not (can_delete or can_add):
            break
        delete = rng.random() < 0.5
        if delete and not can_delete:
            delete = False
        elif not delete and not can_add:
            delete = True
        if delete:
            pool = sorted(edges)
            edges.remove(pool[rng.integers(len(pool))])
        else:
            absent = [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in edges]
            edges.add(absent[rng.integers(len(absent))])
        done += 1
    return g.with_edges(edges), done
