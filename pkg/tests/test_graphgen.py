import itertools

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrgipr.errors import DisconnectedGraphError, InvalidSpecError, ResourceLimitError
from rrgipr.graphgen import (
    GraphSpec,
    RegularGraph,
    canonical_form,
    canonical_relabel,
    complete_graph,
    connected_components,
    cycle_graph,
    disjoint_union,
    enumerate_connected_regular,
    generate_regular,
)


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    return h


@pytest.mark.parametrize("n,z", [(5, 3), (7, 1), (3, 3), (4, 5), (0, 2), (4, 0)])
def test_invalid_specs_rejected(n, z):
    with pytest.raises(InvalidSpecError):
        GraphSpec(n, z)


def test_seed_must_fit_64_bits():
    with pytest.raises(InvalidSpecError):
        GraphSpec(10, 3, 2**64)
    GraphSpec(10, 3, 2**64 - 1)


def test_k4_is_the_unique_cubic_graph_on_four_vertices():
    g = generate_regular(GraphSpec(4, 3, 1))
    assert g.neighbors == ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))


def test_large_sample_is_valid_and_connected():
    g = generate_regular(GraphSpec(1000, 3, 42))
    g.validate()
    assert g.n == 1000 and len(g.edges()) == 1500
    assert connected_components(g) == 1
    assert g.seed == 42


@pytest.mark.parametrize("n,z", [(30, 4), (50, 7), (11, 10), (12, 2)])
def test_samples_are_simple_regular_connected(n, z):
    for seed in range(5):
        g = generate_regular(GraphSpec(n, z, seed)).validate()
        assert connected_components(g) == 1


def test_same_seed_same_graph_different_seed_different_graph():
    a = generate_regular(GraphSpec(200, 4, 9))
    b = generate_regular(GraphSpec(200, 4, 9))
    c = generate_regular(GraphSpec(200, 4, 10))
    assert a.neighbors == b.neighbors
    assert a.neighbors != c.neighbors


def test_two_k4_have_two_components():
    g = disjoint_union(complete_graph(4), complete_graph(4))
    assert g.n == 8
    assert connected_components(g) == 2


def test_validate_catches_broken_graphs():
    with pytest.raises(InvalidSpecError):
        RegularGraph(3, 2, ((1, 2), (0, 2), (0,))).validate()
    with pytest.raises(InvalidSpecError):
        RegularGraph(2, 1, ((0,), (1,))).validate()


def test_text_round_trip():
    g = generate_regular(GraphSpec(20, 3, 5))
    back = RegularGraph.from_text(g.to_text())
    assert back.neighbors == g.neighbors and back.seed == 5


def test_small_degree_graphs_are_uniform_over_labelled_graphs():
    # labelled 2-regular graphs on 4 vertices: the 3 distinct 4-cycles
    seen = {generate_regular(GraphSpec(4, 2, s)).neighbors for s in range(300)}
    assert len(seen) == 3


def labelled_regular_graphs(n, z):
    """Every labelled z-regular graph on n vertices, by degree-pruned backtracking."""
    pairs = list(itertools.combinations(range(n), 2))
    last_pair = {u: max(i for i, p in enumerate(pairs) if u in p) for u in range(n)}
    deg = [0] * n
    chosen = []

    def walk(i):
        if i == len(pairs):
            yield list(chosen)
            return
        u, v = pairs[i]
        for take in (True, False):
            if take and (deg[u] == z or deg[v] == z):
                continue
            if take:
                deg[u] += 1
                deg[v] += 1
                chosen.append((u, v))
            if all(deg[w] == z for w in (u, v) if last_pair[w] == i):
                yield from walk(i + 1)
            if take:
                deg[u] -= 1
                deg[v] -= 1
                chosen.pop()

    yield from walk(0)


def brute_force_count(n, z):
    """Isomorphism classes of connected z-regular graphs via networkx."""
    buckets = {}
    for edges in labelled_regular_graphs(n, z):
        h = nx.Graph(edges)
        if not nx.is_connected(h):
            continue
        # isomorphic graphs share sorted triangle and eccentricity profiles
        key = (tuple(sorted(nx.triangles(h).values())), tuple(sorted(nx.eccentricity(h).values())))
        reps = buckets.setdefault(key, [])
        if not any(nx.is_isomorphic(h, r) for r in reps):
            reps.append(h)
    return sum(len(r) for r in buckets.values())


@pytest.mark.parametrize("n,z", [(4, 3), (5, 2), (6, 3), (6, 4), (7, 4), (8, 3), (7, 2), (5, 4)])
def test_enumeration_matches_brute_force(n, z):
    assert enumerate_connected_regular(n, z).count == brute_force_count(n, z)


@pytest.mark.parametrize("n,expected", [(4, 1), (6, 2), (8, 5), (10, 19), (12, 85), (14, 509)])
def test_connected_cubic_counts(n, expected):
    assert enumerate_connected_regular(n, 3).count == expected


def test_enumerated_graphs_are_pairwise_non_isomorphic():
    graphs = [to_nx(g) for g in enumerate_connected_regular(10, 3).graphs]
    for a, b in itertools.combinations(graphs, 2):
        assert not nx.is_isomorphic(a, b)
    assert all(nx.is_connected(h) for h in graphs)


def test_enumeration_budget():
    with pytest.raises(ResourceLimitError, match="max_vertices=16"):
        enumerate_connected_regular(18, 3)
    with pytest.raises(InvalidSpecError):
        enumerate_connected_regular(9, 3)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32), perm_seed=st.integers(0, 2**32))
def test_canonical_form_invariant_under_relabelling(seed, perm_seed):
    import numpy as np

    g = generate_regular(GraphSpec(12, 3, seed))
    perm = np.random.default_rng(perm_seed).permutation(12)
    h = g.relabel(list(perm))
    assert canonical_form(g)[0] == canonical_form(h)[0]
    assert canonical_relabel(g).neighbors == canonical_relabel(h).neighbors


def test_canonical_form_separates_non_isomorphic_graphs():
    codes = {canonical_form(g)[0] for g in enumerate_connected_regular(12, 3).graphs}
    assert len(codes) == 85


def test_cycle_is_two_regular():
    g = cycle_graph(6).validate()
    assert connected_components(g) == 1


def test_disconnected_error_type_exists_for_callers():
    assert issubclass(DisconnectedGraphError, ValueError)
