import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rewire_attack.errors import InvalidInputError, RejectedActionError
from rewire_attack.graph import (ANY_NODE, Graph, RewiringAction, apply_rewiring,
                                 connected_components, is_valid_rewiring, k_hop_neighbors,
                                 random_add_delete, rewiring_candidates)
from oracles import (all_pairs_distances, brute_force_rewirings, complete_graph, path_graph,
                     random_graph, star_graph)

A = RewiringAction


@st.composite
def graphs(draw, max_nodes=8):
    n = draw(st.integers(1, max_nodes))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph.from_edges(n, chosen)


def test_graph_invariants():
    g = Graph.from_edges(4, [(1, 0), (2, 1), (3, 2)])
    assert g.edges == ((0, 1), (1, 2), (2, 3))
    assert np.array_equal(g.adjacency, g.adjacency.T)
    assert np.array_equal(g.degrees, [1, 2, 2, 1])
    with pytest.raises(InvalidInputError):
        Graph.from_edges(3, [(0, 0)])
    with pytest.raises(InvalidInputError):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(InvalidInputError):
        Graph.from_edges(2, [(0, 1)], features=np.ones((3, 2)))


def test_action_needs_distinct_nodes():
    with pytest.raises(InvalidInputError):
        A(0, 0, 1)


def test_k_hop_examples():
    star = star_graph(4)
    assert k_hop_neighbors(star, 1, 1) == {0}
    assert k_hop_neighbors(star, 1, 2) == {2, 3, 4}
    assert k_hop_neighbors(path_graph(3), 0, 2) == {2}
    lonely = Graph.from_edges(3, [(0, 1)])
    assert k_hop_neighbors(lonely, 2, 1) == set() == k_hop_neighbors(lonely, 2, 3)
    with pytest.raises(InvalidInputError):
        k_hop_neighbors(lonely, 5, 1)


def test_validity_examples():
    p3 = path_graph(3)
    assert is_valid_rewiring(p3, A(0, 1, 2))
    assert not is_valid_rewiring(p3, A(1, 0, 2))
    tri = complete_graph(3)
    assert not any(is_valid_rewiring(tri, A(*t)) for t in [(0, 1, 2), (1, 2, 0), (2, 0, 1)])


def test_candidate_examples():
    assert [a.as_tuple() for a in rewiring_candidates(path_graph(3))] == [(0, 1, 2), (2, 1, 0)]
    assert rewiring_candidates(complete_graph(4)) == []
    assert rewiring_candidates(Graph.from_edges(5, [])) == []


def test_apply_examples():
    p4 = path_graph(4)
    out = apply_rewiring(p4, A(1, 0, 3))
    assert set(out.edges) == {(1, 2), (2, 3), (1, 3)}
    assert out.degrees.sum() == 6
    assert connected_components(out).count == 2
    assert set(apply_rewiring(path_graph(3), A(0, 1, 2)).edges) == {(1, 2), (0, 2)}
    assert p4.edges == ((0, 1), (1, 2), (2, 3))
    with pytest.raises(RejectedActionError):
        apply_rewiring(p4, A(0, 1, 3))


def test_components_examples():
    assert connected_components(path_graph(4)).count == 1
    assert connected_components(Graph.from_edges(5, [])).count == 5
    comps = connected_components(Graph.from_edges(5, [(0, 3), (1, 4)]))
    assert comps.partition == [[0, 3], [1, 4], [2]]


@settings(max_examples=300, deadline=None)
@given(graphs())
def test_candidates_match_brute_force(g):
    got = [a.as_tuple() for a in rewiring_candidates(g)]
    assert got == brute_force_rewirings(g)
    assert all(is_valid_rewiring(g, A(*t)) for t in got)


@settings(max_examples=200, deadline=None)
@given(graphs())
def test_hop_sets_disjoint_and_exact(g):
    d = all_pairs_distances(g)
    for v in range(g.num_nodes):
        n1, n2 = k_hop_neighbors(g, v, 1), k_hop_neighbors(g, v, 2)
        assert not n1 & n2 and v not in n1 | n2
        assert n2 == {int(u) for u in np.flatnonzero(d[v] == 2)}


@settings(max_examples=200, deadline=None)
@given(graphs(), st.data())
def test_rewiring_preserves_totals_and_reverses(g, data):
    cands = rewiring_candidates(g)
    if not cands:
        return
    a = data.draw(st.sampled_from(cands))
    out = apply_rewiring(g, a)
    assert out.num_nodes == g.num_nodes and out.num_edges == g.num_edges
    assert out.degrees.sum() == g.degrees.sum()
    assert np.all(np.diag(out.adjacency) == 0)
    back = A(a.fir, a.thi, a.sec)
    if is_valid_rewiring(out, back):
        assert apply_rewiring(out, back).edges == g.edges


def test_any_node_mode():
    p4 = path_graph(4)
    assert not is_valid_rewiring(p4, A(0, 1, 3))
    assert is_valid_rewiring(p4, A(0, 1, 3), ANY_NODE)
    assert set(apply_rewiring(p4, A(0, 1, 3), ANY_NODE).edges) == {(0, 3), (1, 2), (2, 3)}
    for a in rewiring_candidates(p4, ANY_NODE):
        assert not p4.has_edge(a.fir, a.thi) and p4.has_edge(a.fir, a.sec)


def test_random_add_delete():
    rng = np.random.default_rng(0)
    p = path_graph(4)
    same, done = random_add_delete(p, 0, rng)
    assert same.edges == p.edges and done == 0
    for seed in range(20):
        out, done = random_add_delete(p, 1, np.random.default_rng(seed))
        assert done == 1 and out.num_edges in (2, 4)
    a, _ = random_add_delete(random_graph(np.random.default_rng(1), 10, 0.3), 5, np.random.default_rng(7))
    b, _ = random_add_delete(random_graph(np.random.default_rng(1), 10, 0.3), 5, np.random.default_rng(7))
    assert a.edges == b.edges
    # empty graph forces additions, complete graph forces deletions
    for seed in range(10):
        out, _ = random_add_delete(Graph.from_edges(4, []), 1, np.random.default_rng(seed))
        assert out.num_edges == 1
        out, _ = random_add_delete(complete_graph(4), 1, np.random.default_rng(seed))
        assert out.num_edges == 5
    single, done = random_add_delete(Graph.from_edges(1, []), 3, rng)
    assert done == 0


def test_permuted_graph_relabels_features():
    g = Graph.from_edges(3, [(0, 1)], features=np.arange(6.0).reshape(3, 2))
    h = g.permuted([2, 0, 1])
    assert h.edges == ((0, 2),)
    assert np.array_equal(h.features[2], g.features[0])
