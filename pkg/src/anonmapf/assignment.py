"""Initial target assignment for anonymous agents.

Every function returns an :class:`Assignment` whose ``goals`` give one node per
agent: its target, or a parking node for agents left without one.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Optional

from anonmapf import _backend
from anonmapf.errors import CapacityError
from anonmapf.graph import DistanceOracle
from anonmapf.instance import Instance
from anonmapf.matching_flow import BipartiteGraph, Matching, augment_once, min_cost_max_matching


@dataclass
class Assignment:
    """``goals[i]`` is agent i's target node (or parking node); None while unassigned."""

    starts: tuple[int, ...]
    goals: list
    costs: list  # per-agent start->goal distance; None while unassigned
    parked: set = field(default_factory=set)
    expansions: int = 0

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(s, g) for s, g in zip(self.starts, self.goals) if g is not None]

    @property
    def target_pairs(self) -> list[tuple[int, int]]:
        return [(s, g) for i, (s, g) in enumerate(zip(self.starts, self.goals))
                if g is not None and i not in self.parked]

    @property
    def bottleneck_cost(self) -> int:
        return max((c for i, c in enumerate(self.costs) if c is not None and i not in self.parked),
                   default=0)

    @property
    def total_cost(self) -> int:
        return sum(c for i, c in enumerate(self.costs) if c is not None and i not in self.parked)

    @property
    def complete(self) -> bool:
        return all(g is not None for g in self.goals)


def _new(instance: Instance) -> Assignment:
    n = instance.n_agents
    return Assignment(instance.starts, [None] * n, [None] * n)


def _finish(instance: Instance, a: Assignment, oracle: DistanceOracle, before: int) -> Assignment:
    a.expansions = oracle.expansions - before
    if not a.complete:
        a = park_surplus_agents(instance, a)
    return a


# -- bottleneck assignment ----------------------------------------------------

def assign_bottleneck(instance: Instance, with_min_cost: bool = False, lazy: bool = True,
                      oracle: Optional[DistanceOracle] = None) -> Assignment:
    """Minimize the maximum start-target distance; optionally then the total among ties.

    Pairs enter a bipartite graph in nondecreasing distance order and the
    matching grows by single augmentations until every target is matched.
    With ``lazy`` the queue is seeded with heuristic estimates and real
    distances are computed only for popped estimates.
    """
    oracle = oracle or DistanceOracle(instance.graph)
    before = oracle.expansions
    S, T = instance.starts, instance.targets
    a = _new(instance)
    if not T:
        return _finish(instance, a, oracle, before)
    graph = instance.graph
    # entries: (key, is_estimate, agent, target index)
    if lazy:
        q = [(graph.heuristic(s, g), 1, i, j) for i, s in enumerate(S) for j, g in enumerate(T)]
    else:
        q = []
        for j, g in enumerate(T):
            table = oracle.table(g)
            q.extend((table[s], 0, i, j) for i, s in enumerate(S))
    heapq.heapify(q)
    bg = BipartiteGraph(range(len(S)), range(len(T)))
    m = Matching()
    bottleneck = None
    while q:
        d, est, i, j = heapq.heappop(q)
        if est:
            heapq.heappush(q, (oracle.dist_lazy(S[i], T[j]), 0, i, j))
            continue
        bg.add_edge(i, j, d)
        m, _ = augment_once(bg, m)
        if len(m) == len(T):
            bottleneck = d
            break
    if with_min_cost:
        while q and q[0][0] <= bottleneck:
            d, est, i, j = heapq.heappop(q)
            if est:
                heapq.heappush(q, (oracle.dist_lazy(S[i], T[j]), 0, i, j))
            elif d == bottleneck:
                bg.add_edge(i, j, d)
        m = min_cost_max_matching(bg)
    for i, j in m.left_mate.items():
        a.goals[i] = T[j]
        a.costs[i] = bg.cost(i, j)
    return _finish(instance, a, oracle, before)


# -- greedy assignment with refinement ------------------------------------------

def _greedy_phase(instance: Instance, oracle: DistanceOracle, a: Assignment):
    """Each agent takes its nearest untried target; strictly closer agents displace holders."""
    graph = instance.graph
    marks = bytearray(graph.n_nodes)
    for g in instance.targets:
        marks[g] = 1
    n = instance.n_agents
    goal, cost = _backend.int_buffer(n, -1), _backend.int_buffer(n, -1)
    oracle.expansions += _backend.kernels.greedy_assign(
        graph.indptr, graph.indices, marks, *oracle.bank(instance.starts), goal, cost,
        graph.n_nodes)
    for i in range(n):
        if goal[i] >= 0:
            a.goals[i], a.costs[i] = goal[i], cost[i]


def _refine_makespan(instance: Instance, oracle: DistanceOracle, a: Assignment):
    """Swap goals pairwise while the current maximum cost can be strictly reduced."""
    graph = instance.graph
    goal = _backend.int_buffer_from(-1 if g is None else g for g in a.goals)
    cost = _backend.int_buffer_from(-1 if c is None else c for c in a.costs)
    oracle.expansions += _backend.kernels.refine_makespan(
        graph.indptr, graph.indices, graph.xs, graph.ys, _backend.int_buffer_from(instance.starts),
        *oracle.bank(instance.starts), goal, cost)
    for i in range(instance.n_agents):
        if goal[i] >= 0:
            a.goals[i], a.costs[i] = goal[i], cost[i]


def _refine_sum_of_costs(instance: Instance, oracle: DistanceOracle, a: Assignment):
    S = instance.starts
    h = instance.graph.heuristic
    agents = [i for i, g in enumerate(a.goals) if g is not None]
    improved = True
    while improved:
        improved = False
        for x, i in enumerate(agents):
            for j in agents[x + 1:]:
                gi, gj = a.goals[i], a.goals[j]
                c_now = a.costs[i] + a.costs[j]
                if h(S[j], gi) + h(S[i], gj) >= c_now:
                    continue
                dji = oracle.dist_lazy(gi, S[j])
                dij = oracle.dist_lazy(gj, S[i])
                if dji + dij < c_now:
                    a.goals[i], a.goals[j] = gj, gi
                    a.costs[i], a.costs[j] = dij, dji
                    improved = True


def assign_greedy_refined(instance: Instance, objective: str = "makespan", lazy: bool = True,
                          oracle: Optional[DistanceOracle] = None) -> Assignment:
    """Greedy nearest-target assignment with replacement, then pairwise swaps.

    ``objective`` is ``"makespan"`` (shrink the largest pair distance) or
    ``"sum_of_costs"``. Swaps are accepted only on strict improvement.
    """
    if objective not in ("makespan", "sum_of_costs"):
        raise ValueError(f"unknown objective {objective!r}")
    oracle = oracle or DistanceOracle(instance.graph)
    before = oracle.expansions
    if not lazy:
        for s in instance.starts:
            oracle.table(s)
    a = _new(instance)
    if instance.targets:
        _greedy_phase(instance, oracle, a)
        if objective == "makespan":
            _refine_makespan(instance, oracle, a)
        else:
            _refine_sum_of_costs(instance, oracle, a)
    return _finish(instance, a, oracle, before)


# -- baselines ------------------------------------------------------------------

def _all_distances(instance: Instance, oracle: DistanceOracle) -> list[list[int]]:
    """``d[i][j]`` = dist(start i, target j), via one full BFS per target."""
    cols = [oracle.table(g) for g in instance.targets]
    return [[col[s] for col in cols] for s in instance.starts]


def assign_naive_greedy(instance: Instance, oracle: Optional[DistanceOracle] = None) -> Assignment:
    """Accept globally shortest pairs first among still-free agents and targets."""
    oracle = oracle or DistanceOracle(instance.graph)
    before = oracle.expansions
    a = _new(instance)
    d = _all_distances(instance, oracle)
    pairs = sorted((d[i][j], i, j) for i in range(instance.n_agents)
                   for j in range(instance.n_targets))
    used = set()
    for c, i, j in pairs:
        if a.goals[i] is None and j not in used:
            used.add(j)
            a.goals[i], a.costs[i] = instance.targets[j], c
    return _finish(instance, a, oracle, before)


def assign_optimal_linear(instance: Instance, oracle: Optional[DistanceOracle] = None) -> Assignment:
    """Minimum total distance over all assignments (successive shortest paths)."""
    oracle = oracle or DistanceOracle(instance.graph)
    before = oracle.expansions
    a = _new(instance)
    d = _all_distances(instance, oracle)
    bg = BipartiteGraph(range(instance.n_agents), range(instance.n_targets))
    for i, row in enumerate(d):
        for j, c in enumerate(row):
            bg.add_edge(i, j, c)
    m = min_cost_max_matching(bg)
    for i, j in m.left_mate.items():
        a.goals[i], a.costs[i] = instance.targets[j], d[i][j]
    return _finish(instance, a, oracle, before)


# -- surplus agents -------------------------------------------------------------

def park_surplus_agents(instance: Instance, partial: Assignment) -> Assignment:
    """Give every unassigned agent a distinct non-target node.

    An agent keeps its own start when that is not a target; otherwise it
    takes the nearest free non-target node (ties: smallest node id).
    """
    graph = instance.graph
    targets = set(instance.targets)
    taken = set(g for g in partial.goals if g is not None)
    surplus = [i for i, g in enumerate(partial.goals) if g is None]
    free_slots = graph.n_nodes - len(targets) - len(taken - targets)
    if len(surplus) > free_slots:
        raise CapacityError(f"{len(surplus)} surplus agents but {free_slots} parking nodes")
    out = Assignment(partial.starts, list(partial.goals), list(partial.costs),
                     set(partial.parked), partial.expansions)
    pending = []
    for i in surplus:
        s = instance.starts[i]
        if s not in targets and s not in taken:
            out.goals[i], out.costs[i] = s, 0
            taken.add(s)
            out.parked.add(i)
        else:
            pending.append(i)
    for i in pending:
        s = instance.starts[i]
        dist = {s: 0}
        frontier = [s]
        best = None
        while frontier and best is None:
            found = [v for v in frontier if v not in targets and v not in taken]
            if found:
                best = min(found)
                break
            nxt = []
            for u in frontier:
                for v in graph.adj[u]:
                    if v not in dist:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        if best is None:
            raise CapacityError("no free parking node reachable")
        out.goals[i], out.costs[i] = best, dist[best]
        taken.add(best)
        out.parked.add(i)
    return out


ASSIGNERS: dict[str, Callable[..., Assignment]] = {
    "alg2": lambda inst, **kw: assign_bottleneck(inst, with_min_cost=False, **kw),
    "alg2dagger": lambda inst, **kw: assign_bottleneck(inst, with_min_cost=True, **kw),
    "alg2dagger_eager": lambda inst, **kw: assign_bottleneck(inst, with_min_cost=True, lazy=False, **kw),
    "alg3": lambda inst, **kw: assign_greedy_refined(inst, "makespan", **kw),
    "alg3_eager": lambda inst, **kw: assign_greedy_refined(inst, "makespan", lazy=False, **kw),
    "alg5": lambda inst, **kw: assign_greedy_refined(inst, "sum_of_costs", **kw),
    "naive": assign_naive_greedy,
    "linear": assign_optimal_linear,
}


def format_assignment(instance: Instance, a: Assignment) -> str:
    """Text export: ``x,y -> x,y dist=d`` per agent, then a summary line."""
    from anonmapf.instance import format_cell

    g = instance.graph
    lines = []
    for s, goal, c in zip(a.starts, a.goals, a.costs):
        lines.append(f"{format_cell(g, s)} -> {format_cell(g, goal)} dist={c}")
    lines.append(f"bottleneck={a.bottleneck_cost} total={a.total_cost}")
    return "\n".join(lines) + "\n"
