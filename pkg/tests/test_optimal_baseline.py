import itertools
import random

import pytest

from anonmapf.errors import ContractError, InputError, SolverTimeout
from anonmapf.graph import Graph
from anonmapf.instance import (Instance, Plan, compute_metrics, generate_random_instance,
                               random_grid, validate_plan)
from anonmapf.optimal_baseline import (SINK, SOURCE, TimeExpandedNetwork, advance_moves,
                                       bottleneck_lower_bound, build_network,
                                       compute_prune_table, conservative_lower_bound, feasible,
                                       resolve_swap_conflicts, solve_optimal)
from conftest import small_random_instance
from oracles import joint_state_optimum

COMBOS = list(itertools.product(("conservative", "bottleneck"), (True, False), (True, False)))


def test_two_on_line_network_shape(two_on_line):
    ten = build_network(two_on_line, 2)
    # stay 2*5, moves 2*8, layer chain 5, source 2, sink 2
    assert ten.net.n_arcs == 35
    assert ten.n_vertices == 2 + 2 * 2 * 5
    assert ten.decode(ten.in_id(1, 3)) == ("in", 1, 3)
    assert ten.decode(ten.out_id(0, 4)) == ("out", 0, 4)
    with pytest.raises(InputError):
        ten.decode(SINK)


def test_single_node_two_layers():
    g = Graph.from_edges(1, [])
    ten = TimeExpandedNetwork(Instance(g, (0,), (0,)), 2)
    assert ten.n_vertices == 6
    with pytest.raises(InputError):
        TimeExpandedNetwork(Instance(g, (0,), (0,)), 0)


def test_two_on_line_prune_table_and_horizons(two_on_line):
    lam = compute_prune_table(two_on_line)
    assert lam == [2, 1, 0, 1, 0]
    ten1, ok1 = feasible(two_on_line, 1)
    assert not ok1 and ten1.net.value == 1
    ten2, ok2 = feasible(two_on_line, 2)
    assert ok2 and ten2.net.value == 2
    assert sorted((p[0], p[-1]) for p in ten2.paths()) == [(1, 2), (2, 4)]


def test_two_on_line_optimum_and_bounds(two_on_line):
    assert conservative_lower_bound(two_on_line) == 1
    assert bottleneck_lower_bound(two_on_line) == 2
    res = solve_optimal(two_on_line)
    assert res.makespan == 2
    assert compute_metrics(two_on_line, res.plan).as_dict() == {
        "makespan": 2, "sum_of_costs": 3, "maximum_moves": 2, "sum_of_moves": 3}


def test_reuse_contract(two_on_line):
    ten1, _ = feasible(two_on_line, 1)
    with pytest.raises(ContractError):
        feasible(two_on_line, 3, reuse_from=ten1)
    other = Instance(two_on_line.graph, two_on_line.starts, two_on_line.targets)
    with pytest.raises(ContractError):
        feasible(other, 2, reuse_from=ten1)
    ten2, ok = feasible(two_on_line, 2, reuse_from=ten1)
    assert ok


def test_all_technique_combinations_are_optimal():
    rng = random.Random(11)
    for _ in range(150):
        inst = small_random_instance(rng, max_nodes=8, max_agents=3)
        want = joint_state_optimum(inst.graph.adj, inst.starts, inst.targets)
        for lb, prune, reuse in COMBOS:
            res = solve_optimal(inst, lb_mode=lb, use_prune=prune, use_reuse=reuse)
            assert res.makespan == want, (inst, lb, prune, reuse)
            assert res.lower_bound <= want
            assert validate_plan(inst, res.plan) == []


def test_reuse_never_needs_more_augmentations():
    g = random_grid(12, 12, 0.2, seed=4)
    for seed in range(10):
        inst = generate_random_instance(g, 15, seed=seed)
        a = solve_optimal(inst, lb_mode="conservative", use_reuse=True)
        b = solve_optimal(inst, lb_mode="conservative", use_reuse=False)
        assert a.makespan == b.makespan
        assert sum(r[2] for r in a.diagnostics) <= sum(r[2] for r in b.diagnostics)


def test_lower_bound_ordering():
    g = random_grid(10, 10, 0.2, seed=8)
    for seed in range(20):
        inst = generate_random_instance(g, 12, seed=seed)
        c, b = conservative_lower_bound(inst), bottleneck_lower_bound(inst)
        assert c <= b <= solve_optimal(inst).makespan


def test_surplus_agents():
    g = random_grid(6, 6, 0.1, seed=2)
    rng = random.Random(3)
    for seed in range(20):
        inst = generate_random_instance(g, 6, n_targets=3, seed=seed)
        res = solve_optimal(inst, lb_mode=rng.choice(["conservative", "bottleneck"]))
        assert validate_plan(inst, res.plan) == []
        assert conservative_lower_bound(inst) <= res.makespan


def test_already_solved_is_zero(line6):
    inst = Instance(line6, (1, 3, 5), (3, 1))
    res = solve_optimal(inst)
    assert res.makespan == 0 and res.plan.paths == [[1], [3], [5]]


def test_timeout_raises(two_on_line):
    g = random_grid(20, 20, 0.2, seed=1)
    inst = generate_random_instance(g, 40, seed=1)
    with pytest.raises(SolverTimeout) as e:
        solve_optimal(inst, timeout=0.0)
    assert e.value.elapsed is not None


def test_unknown_lb_mode(two_on_line):
    with pytest.raises(InputError):
        solve_optimal(two_on_line, lb_mode="magic")


def test_diagnostics_csv(two_on_line):
    res = solve_optimal(two_on_line, lb_mode="conservative")
    lines = res.diagnostics_csv().splitlines()
    assert lines[0] == "T,flow,augmentations,pruned_expansions"
    assert [l.split(",")[:2] for l in lines[1:]] == [["1", "1"], ["2", "2"]]


# -- post-processing -------------------------------------------------------------

def test_head_on_swap_is_resolved():
    plan = Plan([[1, 2, 3], [2, 1, 0]])
    out = resolve_swap_conflicts(plan)
    assert out.paths == [[1, 1, 0], [2, 2, 3]]
    for t in range(3):
        assert set(out.at(t)) == set(plan.at(t))


def test_no_swap_is_identity():
    plan = Plan([[0, 1, 2], [3, 3, 4]])
    assert resolve_swap_conflicts(plan).paths == plan.paths


def test_vertex_conflict_is_contract_error():
    with pytest.raises(ContractError):
        resolve_swap_conflicts(Plan([[0, 1], [2, 1]]))


def test_advance_moves_pulls_moves_earlier():
    plan = Plan([[0, 0, 1], [5, 5, 5]])
    assert advance_moves(plan).paths == [[0, 1, 1], [5, 5, 5]]
    # agent 1 leaving lets agent 0 follow one step earlier
    assert advance_moves(Plan([[0, 0, 1], [1, 1, 2]])).paths == [[0, 1, 1], [1, 2, 2]]
    # node 1 is still held at t=1, so agent 0 cannot move sooner
    held = Plan([[0, 0, 1], [2, 1, 2]])
    assert advance_moves(held).paths == held.paths
