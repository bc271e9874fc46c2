"""Mixing sets: enumeration, spanning-tree optimality and size bounds."""

import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gscnn.mixing import (
    MixingSet,
    edge_weight,
    full_set,
    mixing_set,
    mst_set,
    rmst_set,
    spanning_components,
)
from gscnn.so3 import clebsch_gordan


def brute_weight(l1, l2, l):
    return sum(
        1 for m1 in range(-l1, l1 + 1) for m2 in range(-l2, l2 + 1) if abs(m1 + m2) <= l
    )


def graph(L, l):
    G = nx.Graph()
    G.add_nodes_from(range(L))
    for a in range(L):
        for b in range(a + 1, L):
            if b - a <= l <= a + b:
                G.add_edge(a, b, weight=edge_weight(a, b, l))
    return G


@given(st.integers(0, 25), st.integers(0, 25), st.data())
def test_edge_weight_closed_form(l1, l2, data):
    l = data.draw(st.integers(abs(l1 - l2), l1 + l2))
    assert edge_weight(l1, l2, l) == brute_weight(l1, l2, l)


def test_edge_weight_equals_cg_nonzeros():
    # generic CG blocks have exactly the structurally allowed nonzeros
    for l1, l2, l in [(2, 3, 4), (5, 5, 3), (6, 2, 5)]:
        assert clebsch_gordan(l1, l2, l).nnz <= edge_weight(l1, l2, l)
    with pytest.raises(ValueError):
        edge_weight(1, 1, 3)


def test_full_set_enumeration():
    pairs = full_set(7, 4)
    ordered = [(a, b) for a in range(7) for b in range(7) if abs(a - b) <= 4 <= a + b]
    assert len(ordered) == 33
    assert sum(1 if a == b else 2 for a, b in pairs) == 33
    assert sorted(pairs) == pairs and all(a <= b for a, b in pairs)


@pytest.mark.parametrize("L", [2, 5, 9, 16, 23])
def test_mst_is_minimum(L):
    for l in range(1, L):
        tree = [(a, b) for a, b in mst_set(L, l) if a != b]
        total = sum(edge_weight(a, b, l) for a, b in tree)
        ref = nx.minimum_spanning_tree(graph(L, l))
        assert total == sum(d["weight"] for _, _, d in ref.edges(data=True))
        assert len(tree) == L - 1


@given(st.integers(2, 14), st.data())
def test_mst_beats_random_spanning_trees(L, data):
    l = data.draw(st.integers(1, L - 1))
    G = graph(L, l)
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    # a spanning tree under random weights is an arbitrary spanning tree of G
    for a, b in G.edges:
        G[a][b]["shuffle"] = rng.random()
    rnd = nx.minimum_spanning_tree(G, weight="shuffle")
    tree = [(a, b) for a, b in mst_set(L, l) if a != b]
    assert sum(edge_weight(a, b, l) for a, b in tree) <= sum(edge_weight(a, b, l) for a, b in rnd.edges)


@pytest.mark.parametrize("L", [1, 2, 3, 8, 17, 40])
def test_mst_connectivity_matches_graph(L):
    for l in range(L):
        full = spanning_components(L, full_set(L, l))
        assert spanning_components(L, mst_set(L, l)) == full
        ref = {frozenset(c) for c in nx.connected_components(graph(L, l))}
        got = {}
        for node, root in enumerate(full):
            got.setdefault(root, set()).add(node)
        # loops are not part of the graph but do not change components
        assert {frozenset(c) for c in got.values()} == ref


def test_mst_loops_and_degree_zero():
    assert mst_set(4, 0) == [(0, 0), (1, 1), (2, 2), (3, 3)]
    assert (1, 1) not in mst_set(6, 3) and (2, 2) in mst_set(6, 3)


def test_mst_deterministic_ties():
    assert mst_set(12, 5) == mst_set(12, 5)
    a = mixing_set(10, "mst")
    b = mixing_set(10, "mst")
    assert a == b


@pytest.mark.parametrize("L", [4, 16, 64])
def test_size_bounds(L):
    bound = 2 * math.ceil(math.log2(2 * L)) + 2
    for l in range(L):
        m = mst_set(L, l)
        r = rmst_set(L, l)
        assert len(m) <= 2 * L
        assert len(r) <= bound
        assert set(r) <= set(m) | {(l, l)}
        assert (l, l) in r


def test_rmst_dyadic_positions_on_a_path():
    # for l = 1 the tree is the path 0-1-2-...; from node 1 the branch towards
    # larger degrees is 1-2, 2-3, ... and positions 1, 2, 4 are kept
    r = rmst_set(10, 1)
    assert (1, 1) in r and (0, 1) in r
    assert {(1, 2), (2, 3), (4, 5), (8, 9)} <= set(r)
    assert (3, 4) not in r


def test_mixing_set_container():
    P = mixing_set(6, "full")
    assert len(P) == 6 and P.sizes()[0] == 6
    with pytest.raises(ValueError):
        MixingSet(2, (((0, 0),), ((0, 2),)))
    with pytest.raises(ValueError):
        MixingSet(2, (((0, 0), (0, 0)), ()))
    with pytest.raises(ValueError):
        MixingSet(2, (((0, 1),), ()))
    with pytest.raises(ValueError):
        mixing_set(4, "dense")
    U = mixing_set(6, "rmst").union(mixing_set(6, "mst"))
    assert all(set(U[l]) == set(mst_set(6, l)) | set(rmst_set(6, l)) for l in range(6))
    assert (0, 0) in P.distinct_pairs()
