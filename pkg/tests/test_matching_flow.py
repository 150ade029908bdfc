import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from anonmapf.errors import ContractError, InfeasibleError, InputError
from anonmapf.matching_flow import (BipartiteGraph, FlowNetwork, Matching, augment_once,
                                    max_flow, maximum_matching, min_cost_max_matching)


def brute_max_matching(left, right, edges):
    best = 0
    for k in range(min(len(left), len(right)), 0, -1):
        for ls in itertools.combinations(left, k):
            for rs in itertools.permutations(right, k):
                if all((s, g) in edges for s, g in zip(ls, rs)):
                    return k
    return best


def brute_min_cost(left, right, costs):
    """Min cost among maximum-cardinality matchings."""
    best = None
    for k in range(min(len(left), len(right)), 0, -1):
        for ls in itertools.combinations(left, k):
            for rs in itertools.permutations(right, k):
                if all((s, g) in costs for s, g in zip(ls, rs)):
                    c = sum(costs[(s, g)] for s, g in zip(ls, rs))
                    best = c if best is None else min(best, c)
        if best is not None:
            return k, best
    return 0, 0


def random_bipartite(rng, nl, nr, p):
    bg = BipartiteGraph(range(nl), range(nr))
    for s in range(nl):
        for g in range(nr):
            if rng.random() < p:
                bg.add_edge(s, g, rng.randint(0, 9))
    return bg


def test_augment_once_grows_by_one():
    bg = BipartiteGraph("ab", "xy")
    bg.add_edge("a", "x")
    m, grew = augment_once(bg, Matching())
    assert grew and m.pairs == {("a", "x")}
    bg.add_edge("b", "x")
    m, grew = augment_once(bg, m)
    assert not grew
    bg.add_edge("a", "y")
    m, grew = augment_once(bg, m)  # needs to reroute a -> y
    assert grew and m.pairs == {("a", "y"), ("b", "x")}


def test_augment_rejects_foreign_matching():
    bg = BipartiteGraph("a", "x")
    with pytest.raises(ContractError):
        augment_once(bg, Matching([("a", "x")]))


def test_duplicate_or_negative_edges():
    bg = BipartiteGraph()
    bg.add_edge(0, 0, 1)
    with pytest.raises(InputError):
        bg.add_edge(0, 0, 2)
    with pytest.raises(InputError):
        bg.add_edge(1, 0, -1)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.floats(0.1, 0.9), st.integers(0, 10**6))
def test_incremental_matching_is_maximum(nl, nr, p, seed):
    rng = random.Random(seed)
    bg = BipartiteGraph(range(nl), range(nr))
    m = Matching()
    edges = set()
    pairs = [(s, g) for s in range(nl) for g in range(nr) if rng.random() < p]
    rng.shuffle(pairs)
    for s, g in pairs:  # one edge at a time, one augmentation each
        bg.add_edge(s, g)
        edges.add((s, g))
        m, _ = augment_once(bg, m)
        assert len(m) == brute_max_matching(range(nl), range(nr), edges)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.floats(0.2, 1.0), st.integers(0, 10**6))
def test_min_cost_matches_brute_force(nl, nr, p, seed):
    bg = random_bipartite(random.Random(seed), nl, nr, p)
    costs = {(s, g): c for s, g, c in bg.edges}
    k, best = brute_min_cost(range(nl), range(nr), costs)
    m = min_cost_max_matching(bg, require_right_saturated=False)
    assert len(m) == k
    assert m.cost(bg) == best
    assert len(maximum_matching(bg)) == k


def test_min_cost_requires_saturation():
    bg = BipartiteGraph([0], [0, 1])
    bg.add_edge(0, 0, 1)
    bg.add_edge(0, 1, 1)
    with pytest.raises(InfeasibleError):
        min_cost_max_matching(bg)


def test_flow_network_unit_paths():
    # two disjoint routes 0->2->1 and 0->3->1 plus a crossing arc
    net = FlowNetwork(4, 0, 1)
    for u, v in [(0, 2), (0, 3), (2, 1), (3, 1), (2, 3)]:
        net.add_arc(u, v)
    assert max_flow(net) == 2
    assert net.check_conservation()
    assert net.recount() == 2


def test_flow_prune_predicate_blocks_vertices():
    net = FlowNetwork(4, 0, 1)
    for u, v in [(0, 2), (0, 3), (2, 1), (3, 1)]:
        net.add_arc(u, v)
    assert max_flow(net, prune=lambda v: v == 3) == 1
    assert net.pruned_hits > 0


def test_flow_push_and_find_arc():
    net = FlowNetwork(3, 0, 1)
    a = net.add_arc(0, 2)
    b = net.add_arc(2, 1)
    net.finalize()
    assert net.find_arc(0, 2) == a
    net.push(a)
    net.push(b)
    net.value += 1
    assert net.find_arc(0, 2) == -1
    assert net.flow(a) == 1 and net.recount() == 1
    with pytest.raises(ContractError):
        net.push(a)
    assert not net.augment()


def test_flow_network_argument_checks():
    with pytest.raises(InputError):
        FlowNetwork(2, 0, 0)
    net = FlowNetwork(2, 0, 1)
    with pytest.raises(InputError):
        net.add_arc(0, 5)
    net.finalize()
    with pytest.raises(ContractError):
        net.add_arc(0, 1)
