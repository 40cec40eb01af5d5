import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rewire_attack.analysis import (RECORD_COLUMNS, analyze_attack, analyze_pair,
                                    compare_operators, kl_logits, random_rewirings,
                                    write_comparison_csv, write_records_csv)
from rewire_attack.classifier import init_classifier, predict
from rewire_attack.data import degree_features
from rewire_attack.env import AttackConfig, random_attack
from rewire_attack.errors import InvalidInputError
from rewire_attack.graph import connected_components
from oracles import complete_graph, path_graph, random_connected_graph, random_graph


def test_kl_examples():
    assert kl_logits([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert kl_logits([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2))
    # zero mass in p_o contributes nothing, even against a zero in p_a
    assert kl_logits([1.0, 0.0], [1.0, 0.0]) == 0.0
    # p_a floored rather than dividing by zero
    assert math.isfinite(kl_logits([0.5, 0.5], [1.0, 0.0]))
    with pytest.raises(InvalidInputError):
        kl_logits([1.0], [0.5, 0.5])


def test_kl_non_negative_on_random_simplex_pairs():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        k = int(rng.integers(2, 6))
        p, q = rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k))
        assert kl_logits(p, q) >= 0.0
        assert kl_logits(p, p) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6))
def test_kl_identity_exact(weights):
    p = np.asarray(weights) / np.sum(weights)
    assert kl_logits(p, p) == 0.0


def _victim(seed=0, d=1):
    return init_classifier(d, 3, np.random.default_rng(seed), hidden_dim=4, mlp_hidden=4)


def test_zero_step_attack_measures_exactly_zero():
    g = complete_graph(5)
    t = random_attack(g, lambda h: 0, AttackConfig(), np.random.default_rng(0))
    rec = analyze_attack(g, t, _victim(), graph_id=7)
    assert rec.steps == 0 and rec.rc == 0.0 and rec.kl == 0.0 and rec.ratio == 0.0
    assert rec.graph_id == 7 and not rec.succeeded
    assert np.allclose(rec.r_lambda[np.isfinite(rec.r_lambda)], 0.0)


def test_analyze_pair_fields():
    rng = np.random.default_rng(1)
    g = random_connected_graph(rng, 10, 0.3)
    g = g.with_features(degree_features(g.degrees))
    h, done = random_rewirings(g, 2, rng)
    m = _victim(1, d=7)
    rec = analyze_pair(g, h, done, "budget_exhausted", m)
    assert rec.ratio == pytest.approx(done / g.num_edges)
    assert rec.label_before == predict(g, m).label and rec.label_after == predict(h, m).label
    assert rec.components_before == 1
    assert rec.components_after == connected_components(h).count
    assert rec.rc >= 0 and rec.kl >= 0
    assert set(rec.row()) == set(RECORD_COLUMNS)


def test_zero_clean_embedding_gives_nan_rc():
    g = path_graph(5)
    m = _victim()
    m = m.with_params({**m.params(), **{k: np.zeros_like(v) for k, v in m.params().items()
                                        if k.startswith("gcn")}})
    h, done = random_rewirings(g, 1, np.random.default_rng(0))
    rec = analyze_pair(g, h, done, "budget_exhausted", m)
    assert math.isnan(rec.rc) and rec.kl == 0.0


def test_random_rewirings_stop_when_stuck():
    g, done = random_rewirings(complete_graph(4), 3, np.random.default_rng(0))
    assert done == 0 and g.same_structure(complete_graph(4))
    g, done = random_rewirings(path_graph(6), 4, np.random.default_rng(0))
    assert g.num_edges == 5 and done >= 1


def test_compare_operators_edge_cases():
    rng = np.random.default_rng(0)
    with pytest.raises(InvalidInputError):
        compare_operators([], rng)
    g = path_graph(5)
    with pytest.raises(InvalidInputError):
        compare_operators([(g, -1)], rng)
    with pytest.raises(InvalidInputError):
        compare_operators([(g, 1)], rng, rewired=[])
    empty = compare_operators([(g, 0), (path_graph(4), 0)], rng)
    assert empty.num_graphs == 0 and empty.ratio_per_index.size == 0
    assert math.isnan(empty.fraction_above_one)


def test_compare_operators_matches_operation_counts():
    rng = np.random.default_rng(2)
    graphs = [(random_connected_graph(rng, 12, 0.3), 2) for _ in range(8)]
    rep = compare_operators(graphs, np.random.default_rng(3))
    assert rep.num_graphs == 8
    assert rep.ratio_per_index.shape == (12,)
    # index 1 (lambda_1 = 0) is undefined on every connected graph
    assert math.isnan(rep.ratio_per_index[0])
    assert rep.components_clean == 1.0
    assert 0 <= rep.more_disconnected_rewired <= 1
    d = rep.defined
    assert d.size > 0 and np.all(d >= 0)


def test_compare_operators_uses_recorded_graphs():
    rng = np.random.default_rng(4)
    g = random_connected_graph(rng, 10, 0.35)
    h, _ = random_rewirings(g, 1, rng)
    rep = compare_operators([(g, 1)], np.random.default_rng(5), rewired=[h])
    from rewire_attack.spectral import eigenvalue_change_ratio
    expected = eigenvalue_change_ratio(g, h)
    assert np.allclose(rep.mean_rewire_ratio, expected, equal_nan=True)


def test_csv_writers(tmp_path):
    rng = np.random.default_rng(6)
    g = random_graph(rng, 8, 0.4)
    rec = analyze_pair(g, g, 0, "no_valid_action", _victim())
    write_records_csv([rec], tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == ",".join(RECORD_COLUMNS) and len(lines) == 2
    rep = compare_operators([(random_connected_graph(rng, 9, 0.4), 1)], rng)
    write_comparison_csv(rep, tmp_path / "b.csv")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "index,mean_r_rewire,mean_r_adddel,ratio" and len(lines) == 10
    assert lines[1].endswith(",nan")
