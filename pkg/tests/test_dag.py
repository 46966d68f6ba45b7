import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from budgetim.dag import InfluenceDag, build_dag, build_dag1, build_dag2, node_ranks, write_dag
from budgetim.graph import InfluenceGraph
from budgetim.region import MioaForest, build_mioa
from test_region import EXAMPLE


def G(n, edges):
    return InfluenceGraph.from_edges(n, edges)


def check_dag(dag, g):
    assert not oracles.has_cycle(dag.nodes.tolist(), list(zip(dag.src.tolist(), dag.dst.tolist())))
    pos = {v: i for i, v in enumerate(dag.nodes.tolist())}
    rank = dag.rank_of()
    for u, v, p in zip(dag.src.tolist(), dag.dst.tolist(), dag.prob.tolist()):
        assert pos[u] < pos[v]
        assert rank[u] <= rank[v]
        assert g.edge_prob(u, v) == p
    for s in dag.seeds:
        assert rank[s] == 0.0


def test_example_ranks():
    r = node_ranks(G(5, EXAMPLE), {0, 1}, 1e-4)
    assert r[0] == 0.0 and r[1] == 0.0
    assert [round(x, 3) for x in r[2:]] == [0.301, 0.398, 0.699]


def test_example_dag1_augmentation():
    g = G(5, EXAMPLE)
    d1 = build_dag1(g, {0, 1}, 1e-4)
    tree = {(0, 2), (1, 3), (2, 4)}
    added = {(0, 3), (1, 2), (2, 3), (3, 4)}
    assert d1.edge_set() == tree | added
    assert (4, 2) not in d1.edge_set()
    check_dag(d1, g)


def test_example_dag2_is_union_of_trees():
    g = G(5, EXAMPLE)
    forest = MioaForest(g, 1e-4)
    d2 = build_dag2(g, {0, 1}, forest, 1e-4)
    union = {(u, v) for s in (0, 1) for u, v, _ in forest.tree(s).edges()}
    assert d2.edge_set() <= union
    assert d2.edge_set() == {(0, 2), (0, 3), (1, 2), (1, 3), (2, 4), (3, 4)}
    check_dag(d2, g)


def test_empty_seed_set():
    g = G(3, [(0, 1, 0.5)])
    with pytest.raises(ValueError, match="empty"):
        node_ranks(g, set())
    with pytest.raises(ValueError, match="empty"):
        build_dag1(g, set())


def test_seed_with_no_out_edges():
    g = G(3, [(1, 2, 0.5)])
    d = build_dag1(g, {0}, 0.01)
    assert d.nodes.tolist() == [0] and d.n_edges == 0


def test_hand_built_dag_keeps_every_edge():
    # ranks strictly increase along the edges and every node is covered
    edges = [(0, 1, 0.9), (0, 2, 0.8), (1, 3, 0.7), (2, 3, 0.6), (1, 4, 0.5), (3, 5, 0.3), (4, 5, 0.4), (2, 4, 0.3)]
    g = G(6, edges)
    d = build_dag1(g, {0}, 1e-4)
    assert set(d.nodes.tolist()) == set(range(6))
    assert d.edge_set() == {(u, v) for u, v, _ in edges}


def test_disjoint_regions_give_disjoint_union():
    g = G(6, [(0, 1, 0.9), (1, 2, 0.9), (3, 4, 0.9), (4, 5, 0.9)])
    forest = MioaForest(g, 0.01)
    d = build_dag2(g, {0, 3}, forest, 0.01)
    assert d.edge_set() == {(0, 1), (1, 2), (3, 4), (4, 5)}


def test_theta_mismatch():
    g = G(3, [(0, 1, 0.5)])
    forest = MioaForest(g, 0.01)
    with pytest.raises(ValueError, match="theta"):
        build_dag2(g, {0}, forest, 0.02)
    with pytest.raises(ValueError, match="theta"):
        build_dag2(g, {0}, {0: build_mioa(g, 0, 0.05)}, 0.02)
    with pytest.raises(ValueError):
        build_dag(g, {0}, "dag3")
    with pytest.raises(ValueError, match="trees"):
        build_dag(g, {0}, "dag2")


instances = st.tuples(
    st.integers(0, 100_000),
    st.integers(2, 9),
    st.integers(0, 20),
    st.sampled_from([1e-4, 1 / 160, 0.05, 0.2]),
)


@settings(max_examples=80)
@given(instances)
def test_both_builders_acyclic_and_nested(case):
    seed, n, m, theta = case
    rng = np.random.default_rng(seed)
    edges = oracles.random_edges(rng, n, m)
    g = G(n, edges)
    seeds = set(rng.choice(n, size=int(rng.integers(1, min(n, 3) + 1)), replace=False).tolist())
    forest = MioaForest(g, theta)
    d1 = build_dag1(g, seeds, theta)
    d2 = build_dag2(g, seeds, forest, theta)
    check_dag(d1, g)
    check_dag(d2, g)
    assert set(d1.nodes.tolist()) == set(d2.nodes.tolist())
    assert d2.edge_set() <= d1.edge_set()
    # pruning never strands a node: each non-seed keeps an in-edge
    has_parent = set(d2.dst.tolist())
    assert all(v in has_parent for v in d2.nodes.tolist() if v not in seeds)
    # the region is every node whose best path from some seed clears theta
    best = oracles.best_path_probs_multi(n, edges, sorted(seeds))
    assert set(d1.nodes.tolist()) == {v for v in range(n) if best[v] >= theta}


@settings(max_examples=40)
@given(instances)
def test_single_seed_dag2_is_its_tree(case):
    seed, n, m, theta = case
    rng = np.random.default_rng(seed)
    g = G(n, oracles.random_edges(rng, n, m))
    root = int(rng.integers(n))
    forest = MioaForest(g, theta)
    t = forest.tree(root)
    d2 = build_dag2(g, {root}, forest, theta)
    assert d2.edge_set() == {(u, v) for u, v, _ in t.edges()}
    r = node_ranks(g, {root}, theta)
    np.testing.assert_array_equal(r[t.members], t.rank)
    assert np.all(np.isinf(np.delete(r, t.members)))


def test_from_edges_rejects_backward_edges():
    with pytest.raises(ValueError, match="backwards"):
        InfluenceDag.from_edges([(1, 0, 0.5)], seeds=[0], nodes=[0, 1])
    with pytest.raises(ValueError, match="seeds"):
        InfluenceDag.from_edges([(0, 1, 0.5)], seeds=[7], nodes=[0, 1])


def test_write_dag(tmp_path):
    g = G(5, EXAMPLE)
    d = build_dag1(g, {0, 1}, 1e-4)
    path = tmp_path / "d.txt"
    write_dag(d, path, labels=np.array([10, 11, 12, 13, 14]))
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# dag model=dag1") and "seeds=10 11" in lines[0]
    body = [ln.split() for ln in lines if not ln.startswith("#")]
    assert len(body) == d.n_edges
    assert {(int(a), int(b)) for a, b, *_ in body} == {(u + 10, v + 10) for u, v in d.edge_set()}
    ranks = [ln for ln in lines if ln.startswith("# rank")]
    assert len(ranks) == d.n_nodes
