import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import graph_from_adj
from talentgraph.centrality import (CentralityVector, ConvergenceError, betweenness_centrality, closeness_centrality,
                                    compute_all, degree_centrality, eigenvector_centrality)
from talentgraph.graphs import WeightedGraph


def path3():
    return WeightedGraph(("a", "b", "c"), ((0, 1, 1.0), (1, 2, 1.0)))


def star(k):
    return WeightedGraph(tuple(f"n{i}" for i in range(k + 1)), tuple((0, i, 1.0) for i in range(1, k + 1)))


def triangle():
    return WeightedGraph(("a", "b", "c"), ((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)))


def test_degree_examples():
    assert degree_centrality(triangle()).tolist() == [2, 2, 2]
    assert degree_centrality(star(5)).tolist() == [5, 1, 1, 1, 1, 1]


def test_degree_popcount(rng):
    a = oracles.random_graph_adj(rng, 12, 0.3, weighted=True)
    assert np.array_equal(degree_centrality(graph_from_adj(a)), (a > 0).sum(axis=1))


def test_closeness_path():
    assert np.allclose(closeness_centrality(path3()), [1 / 3, 1 / 2, 1 / 3])


def test_closeness_isolated_zero():
    g = WeightedGraph(("a", "b", "c"), ((0, 1, 1.0),))
    c = closeness_centrality(g)
    assert c[2] == 0.0
    # component scaling: 1/1 * (2-1)/(3-1)
    assert c[0] == pytest.approx(0.5)


def test_betweenness_examples():
    assert betweenness_centrality(star(4)).tolist() == [6.0, 0, 0, 0, 0]
    assert betweenness_centrality(triangle()).tolist() == [0.0, 0.0, 0.0]


def test_eigenvector_examples():
    k4 = WeightedGraph(tuple("abcd"), tuple((i, j, 1.0) for i in range(4) for j in range(i + 1, 4)))
    assert np.allclose(eigenvector_centrality(k4), 1.0)
    assert np.allclose(eigenvector_centrality(path3()), [2 ** -0.5, 1.0, 2 ** -0.5], atol=1e-8)


def test_oracles_on_random_graphs(rng):
    for _ in range(20):
        n = int(rng.integers(2, 11))
        a = oracles.random_graph_adj(rng, n, rng.uniform(0.1, 0.7), weighted=True)
        g = graph_from_adj(a)
        assert np.allclose(closeness_centrality(g), oracles.closeness(a), atol=1e-12)
        assert np.allclose(betweenness_centrality(g), oracles.betweenness(a), atol=1e-9)
        assert np.abs(eigenvector_centrality(g) - oracles.eigenvector(a)).max() < 1e-6


def test_betweenness_matches_networkx(rng):
    a = oracles.random_graph_adj(rng, 15, 0.25)
    ref = nx.betweenness_centrality(nx.from_numpy_array(a), normalized=False)
    assert np.allclose(betweenness_centrality(graph_from_adj(a)), [ref[k] for k in range(15)])


def test_nonconvergence_raises():
    g = WeightedGraph(tuple("abcd"), ((0, 1, 1.0), (1, 2, 5.0), (2, 3, 1.0)))
    with pytest.raises(ConvergenceError) as err:
        eigenvector_centrality(g, tol=1e-15, max_iter=3)
    assert err.value.iterations == 3 and err.value.residual > 0


def test_csv_roundtrip(tmp_path, rng):
    cv = compute_all(graph_from_adj(oracles.random_graph_adj(rng, 7, 0.5, weighted=True)))
    cv.write_csv(tmp_path / "c.csv")
    back = CentralityVector.read_csv(tmp_path / "c.csv")
    assert np.array_equal(back.as_matrix(), cv.as_matrix()) and back.order == cv.order


graphs_st = st.tuples(st.integers(2, 10), st.floats(0.1, 0.8), st.integers(0, 2**31))


@given(graphs_st)
def test_relabel_equivariance(case):
    n, p, seed = case
    rng = np.random.default_rng(seed)
    a = oracles.random_graph_adj(rng, n, p, weighted=True)
    perm = rng.permutation(n)
    g = graph_from_adj(a)
    base = compute_all(g).as_matrix()
    moved = compute_all(g.permuted(perm)).as_matrix()
    # old node k moves to position perm[k]
    assert np.allclose(moved[perm], base, atol=1e-9)


@given(graphs_st, st.floats(0.01, 100.0))
def test_weight_scaling_invariance(case, scale):
    n, p, seed = case
    a = oracles.random_graph_adj(np.random.default_rng(seed), n, p, weighted=True)
    base = compute_all(graph_from_adj(a)).as_matrix()
    scaled = compute_all(graph_from_adj(a * scale)).as_matrix()
    assert np.allclose(base, scaled, atol=1e-8)


@given(graphs_st)
def test_leaf_betweenness_zero(case):
    n, p, seed = case
    a = oracles.random_graph_adj(np.random.default_rng(seed), n, p)
    b = betweenness_centrality(graph_from_adj(a))
    leaves = (a > 0).sum(axis=1) == 1
    assert np.all(b[leaves] == 0)
