import random

import pytest
from hypothesis import given, settings, strategies as st

from anonmapf.errors import InputError
from anonmapf.graph import DistanceOracle, Graph, bfs_distances, connected_components
from anonmapf.instance import parse_movingai_map, random_grid
from oracles import all_pairs, textbook_bfs

OPEN5 = "type octile\nheight 5\nwidth 5\nmap\n" + ".....\n" * 5


def test_graph_rejects_bad_adjacency():
    with pytest.raises(InputError):
        Graph([[0]])  # self-loop
    with pytest.raises(InputError):
        Graph([[1, 1], [0]])
    with pytest.raises(InputError):
        Graph([[1], []])  # missing reverse edge
    with pytest.raises(InputError):
        Graph.from_edges(4, [(0, 1), (2, 3)])  # disconnected
    with pytest.raises(InputError):
        Graph([])


def test_from_edges_sorts_neighbors():
    g = Graph.from_edges(4, [(0, 3), (0, 1), (1, 2), (2, 3)])
    assert g.adj[0] == (1, 3)
    assert g.n_edges == 4
    assert not g.is_grid


def test_dist_on_six_cell_line(line6):
    o = DistanceOracle(line6)
    assert o.dist(2, 0) == 2
    assert o.dist_lazy(4, 4) == 0
    for u in range(6):
        assert o.dist(u, u) == 0


def test_dist_matches_textbook_bfs_on_obstacle_grid():
    g = random_grid(8, 8, 0.2, seed=11)
    truth = all_pairs(g.adj)
    o = DistanceOracle(g)
    for u in range(g.n_nodes):
        for v in range(g.n_nodes):
            assert o.dist(u, v) == truth[v][u]


def test_lazy_is_memoized():
    g = random_grid(16, 16, 0.2, seed=2)
    o = DistanceOracle(g)
    d = o.dist_lazy(0, g.n_nodes - 1)
    before = o.expansions
    assert o.dist_lazy(0, g.n_nodes - 1) == d
    assert o.expansions == before


def test_lazy_agrees_with_eager_on_random_pairs():
    g = random_grid(16, 16, 0.2, seed=5)
    rng = random.Random(0)
    lazy, eager = DistanceOracle(g), DistanceOracle(g)
    for _ in range(100):
        u, v = rng.randrange(g.n_nodes), rng.randrange(g.n_nodes)
        assert lazy.dist_lazy(u, v) == eager.dist(u, v)


def test_lazy_does_less_work_than_full_table():
    g = random_grid(16, 16, 0.0, seed=0)
    o = DistanceOracle(g)
    o.dist_lazy(g.node_at(1, 0), g.node_at(0, 0))
    assert o.expansions < g.n_nodes


def test_unknown_node_is_input_error(line6):
    o = DistanceOracle(line6)
    with pytest.raises(InputError):
        o.dist(0, 6)
    with pytest.raises(InputError):
        o.dist_lazy(-1, 0)
    with pytest.raises(InputError):
        o.next_node(0, 99)
    with pytest.raises(InputError):
        o.heuristic(0, "a")


def test_heuristic_manhattan_and_admissible():
    g = parse_movingai_map(OPEN5)
    o = DistanceOracle(g)
    assert o.heuristic(g.node_at(0, 0), g.node_at(3, 4)) == 7
    assert o.heuristic(5, 5) == 0
    for u in range(g.n_nodes):
        for v in range(g.n_nodes):
            assert o.heuristic(u, v) == o.dist(u, v)  # open grid: exact


def test_heuristic_zero_off_grid(line6):
    g = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert DistanceOracle(g).heuristic(0, 2) == 0


def test_next_node_line_and_identity(line6):
    o = DistanceOracle(line6)
    assert o.next_node(3, 5) == 4
    assert o.next_node(5, 5) == 5


def test_next_node_breaks_ties_by_smallest_id():
    g = parse_movingai_map(OPEN5)
    o = DistanceOracle(g)
    u, w = g.node_at(2, 2), g.node_at(0, 0)
    cands = (u,) + g.adj[u]
    best = min(o.dist(x, w) for x in cands)
    expected = min(x for x in cands if o.dist(x, w) == best)
    assert best == 3
    assert o.next_node(u, w) == expected == g.node_at(2, 1)


def test_bfs_distances_multi_source():
    g = random_grid(10, 10, 0.2, seed=4)
    srcs = [0, g.n_nodes // 2, g.n_nodes - 1]
    got = bfs_distances(g, srcs)
    tables = [textbook_bfs(g.adj, s) for s in srcs]
    assert got == [min(t[v] for t in tables) for v in range(g.n_nodes)]


def test_components_of_grid():
    g = random_grid(12, 12, 0.3, seed=1)
    assert len(connected_components(g)) == 1


@st.composite
def grid_and_pairs(draw):
    w, h = draw(st.integers(2, 9)), draw(st.integers(2, 9))
    g = random_grid(w, h, draw(st.sampled_from([0.0, 0.1, 0.3])), seed=draw(st.integers(0, 10**6)))
    pairs = draw(st.lists(st.tuples(st.integers(0, g.n_nodes - 1), st.integers(0, g.n_nodes - 1)),
                          min_size=1, max_size=20))
    return g, pairs


@settings(max_examples=60, deadline=None)
@given(grid_and_pairs())
def test_distance_properties(data):
    g, pairs = data
    o = DistanceOracle(g)
    truth = all_pairs(g.adj)
    diam = max(max(row) for row in truth)
    for u, v in pairs:
        d = o.dist_lazy(u, v)
        assert d == truth[v][u] == o.dist(v, u)
        assert 0 <= o.heuristic(u, v) <= d <= diam
        if u != v:
            nxt = o.next_node(u, v)
            assert nxt in g.adj[u]
            assert o.dist(nxt, v) == d - 1
            assert o.next_node(u, v) == nxt
