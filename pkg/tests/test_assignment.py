import random

import pytest

from anonmapf.assignment import (ASSIGNERS, Assignment, assign_bottleneck, assign_greedy_refined,
                                 assign_naive_greedy, assign_optimal_linear, format_assignment,
                                 park_surplus_agents)
from anonmapf.errors import CapacityError
from anonmapf.graph import DistanceOracle, Graph
from anonmapf.instance import Instance, generate_random_instance, random_grid
from oracles import all_pairs, brute_bottleneck, brute_total


def cost_matrix(inst):
    d = all_pairs(inst.graph.adj)
    return [[d[g][s] for g in inst.targets] for s in inst.starts]


def check_assignment(inst, a):
    assert a.complete
    assert len(set(a.goals)) == len(a.goals)
    targets = set(inst.targets)
    assert targets <= set(a.goals)
    d = all_pairs(inst.graph.adj)
    for i, (s, g) in enumerate(zip(inst.starts, a.goals)):
        assert a.costs[i] == d[g][s]
        assert (g in targets) == (i not in a.parked)


def test_swap_corridor_costs(swap_corridor):
    a = assign_bottleneck(swap_corridor)
    assert a.bottleneck_cost == 2
    b = assign_bottleneck(swap_corridor, with_min_cost=True)
    assert (b.bottleneck_cost, b.total_cost) == (2, 4)


@pytest.mark.parametrize("name", sorted(ASSIGNERS))
def test_every_assigner_is_a_valid_assignment(name):
    rng = random.Random(name)
    for k in range(15):
        g = random_grid(rng.randint(3, 9), rng.randint(3, 9), 0.2, seed=k)
        n = rng.randint(1, min(12, g.n_nodes))
        inst = generate_random_instance(g, n, rng.randint(0, n), seed=k)
        check_assignment(inst, ASSIGNERS[name](inst))


def test_bottleneck_and_linear_match_brute_force():
    for seed in range(60):
        rng = random.Random(seed)
        g = random_grid(rng.randint(3, 8), rng.randint(3, 8), 0.2, seed=seed)
        n = rng.randint(1, min(6, g.n_nodes))
        inst = generate_random_instance(g, n, seed=seed)
        d = cost_matrix(inst)
        assert assign_bottleneck(inst).bottleneck_cost == brute_bottleneck(d)
        assert assign_optimal_linear(inst).total_cost == brute_total(d)
        dag = assign_bottleneck(inst, with_min_cost=True)
        assert dag.bottleneck_cost == brute_bottleneck(d)


def test_dagger_minimizes_total_among_bottleneck_optimal():
    import itertools
    for seed in range(40):
        rng = random.Random(seed)
        g = random_grid(6, 6, 0.2, seed=seed)
        inst = generate_random_instance(g, rng.randint(2, 6), seed=seed)
        d = cost_matrix(inst)
        b = brute_bottleneck(d)
        n = len(d)
        best = min(sum(d[p[j]][j] for j in range(n)) for p in itertools.permutations(range(n))
                   if max(d[p[j]][j] for j in range(n)) == b)
        assert assign_bottleneck(inst, with_min_cost=True).total_cost == best


@pytest.mark.parametrize("lazy_name,eager_name", [("alg2dagger", "alg2dagger_eager"),
                                                  ("alg3", "alg3_eager")])
def test_lazy_and_eager_agree(lazy_name, eager_name):
    g = random_grid(16, 16, 0.2, seed=1)
    for seed in range(10):
        inst = generate_random_instance(g, 20, seed=seed)
        a, b = ASSIGNERS[lazy_name](inst), ASSIGNERS[eager_name](inst)
        assert (a.bottleneck_cost, a.total_cost) == (b.bottleneck_cost, b.total_cost)
        assert a.expansions < b.expansions


def test_greedy_refined_objectives():
    g = random_grid(12, 12, 0.2, seed=3)
    for seed in range(10):
        inst = generate_random_instance(g, 15, seed=seed)
        mk = assign_greedy_refined(inst, "makespan")
        soc = assign_greedy_refined(inst, "sum_of_costs")
        opt = assign_optimal_linear(inst)
        bott = assign_bottleneck(inst)
        assert mk.bottleneck_cost >= bott.bottleneck_cost
        assert soc.total_cost >= opt.total_cost
        # no single pairwise swap improves the refined sum of costs
        d = all_pairs(g.adj)
        for i in range(inst.n_agents):
            for j in range(i + 1, inst.n_agents):
                si, sj = inst.starts[i], inst.starts[j]
                gi, gj = soc.goals[i], soc.goals[j]
                assert d[gj][si] + d[gi][sj] >= d[gi][si] + d[gj][sj]
    with pytest.raises(ValueError):
        assign_greedy_refined(inst, "other")


def test_refined_makespan_no_improving_swap_for_max_agent():
    g = random_grid(12, 12, 0.2, seed=8)
    d = all_pairs(g.adj)
    for seed in range(10):
        inst = generate_random_instance(g, 12, seed=seed)
        a = assign_greedy_refined(inst, "makespan")
        c = a.bottleneck_cost
        i = min(k for k in range(inst.n_agents) if a.costs[k] == c)
        for j in range(inst.n_agents):
            if j != i:
                assert max(d[a.goals[j]][inst.starts[i]], d[a.goals[i]][inst.starts[j]]) >= c


def test_surplus_agents_are_parked():
    g = random_grid(8, 8, 0.1, seed=0)
    inst = generate_random_instance(g, 10, 4, seed=3)
    for name in ASSIGNERS:
        a = ASSIGNERS[name](inst)
        assert len(a.parked) == 6
        check_assignment(inst, a)


def test_parking_prefers_own_start_then_nearest():
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    inst = Instance(g, (0, 1), (0,))
    partial = Assignment(inst.starts, [0, None], [0, None])
    out = park_surplus_agents(inst, partial)
    assert out.goals == [0, 1] and out.parked == {1}
    inst = Instance(g, (1, 0), (0,))
    out = park_surplus_agents(inst, Assignment(inst.starts, [None, 0], [None, 0]))
    assert out.goals == [1, 0]
    inst = Instance(g, (2, 0, 3), (2,))
    out = park_surplus_agents(inst, Assignment(inst.starts, [None, 2, None], [None, 1, None]))
    assert out.goals[0] == 1 and out.costs[0] == 1


def test_parking_capacity_error():
    g = Graph.from_edges(2, [(0, 1)])
    inst = Instance(g, (0, 1), (0,))
    with pytest.raises(CapacityError):
        park_surplus_agents(inst, Assignment(inst.starts, [None, None], [None, None]))


def test_shared_oracle_and_export(swap_corridor):
    o = DistanceOracle(swap_corridor.graph)
    a = assign_bottleneck(swap_corridor, oracle=o)
    again = assign_bottleneck(swap_corridor, oracle=o)
    assert again.expansions == 0 and again.goals == a.goals
    text = format_assignment(swap_corridor, a)
    assert text.splitlines()[0] == "2,0 -> 0,0 dist=2"
    assert text.endswith("bottleneck=2 total=4\n")


def test_naive_greedy_takes_globally_shortest_pairs_first():
    g = Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    inst = Instance(g, (1, 3), (2, 4))
    a = assign_naive_greedy(inst)
    # (1->2) and (3->2) tie at 1; the lower agent index wins, then 3 takes 4
    assert a.goals == [2, 4] and a.total_cost == 2


def test_no_targets():
    g = Graph.from_edges(3, [(0, 1), (1, 2)])
    inst = Instance(g, (0, 2), ())
    for name in ASSIGNERS:
        a = ASSIGNERS[name](inst)
        assert a.goals == [0, 2] and a.bottleneck_cost == 0
