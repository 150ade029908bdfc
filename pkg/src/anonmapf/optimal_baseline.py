"""Makespan-optimal planning through maximum flow on time-expanded networks.

The horizon T is searched upward from a lower bound. Each N(T) is built from
scratch; with reuse, the previous horizon's flow is replayed into it (every
path extended by one final stay) before new augmenting paths are searched.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from anonmapf.assignment import assign_bottleneck
from anonmapf.errors import ContractError, InputError, SolverTimeout
from anonmapf.graph import bfs_distances
from anonmapf.instance import Instance, Plan
from anonmapf.matching_flow import FlowNetwork

SOURCE, SINK, PARK = 0, 1, 2


class TimeExpandedNetwork:
    """N(T): ``in(t,v)`` / ``out(t,v)`` per node and timestep plus source and sink.

    When agents outnumber targets an extra ``park`` vertex collects the
    surplus agents from non-target nodes at the last layer.
    """

    def __init__(self, instance: Instance, T: int):
        if T < 1:
            raise InputError("horizon must be at least 1")
        self.instance = instance
        self.T = T
        graph = instance.graph
        V = graph.n_nodes
        self.V = V
        self.surplus = instance.n_agents - instance.n_targets
        self.base = 3 if self.surplus else 2
        n_vertices = self.base + 2 * T * V

        nodes = np.arange(V, dtype=np.int64)
        layers = np.arange(T, dtype=np.int64)
        in_ids = self.base + 2 * (layers[:, None] * V + nodes[None, :])  # [t, v]
        out_ids = in_ids + 1
        eu = np.repeat(nodes, np.diff(np.frombuffer(graph.indptr, dtype=np.int32)))
        ev = np.frombuffer(graph.indices, dtype=np.int32)[:len(eu)].astype(np.int64)

        tails, heads = [], []
        # stay
        tails.append(in_ids.ravel())
        heads.append(out_ids.ravel())
        # move along each directed edge
        tails.append(in_ids[:, eu].ravel())
        heads.append(out_ids[:, ev].ravel())
        # chain to the next layer
        if T > 1:
            tails.append(out_ids[:-1].ravel())
            heads.append(in_ids[1:].ravel())
        starts = np.asarray(instance.starts, dtype=np.int64)
        targets = np.asarray(instance.targets, dtype=np.int64)
        tails.append(np.full(len(starts), SOURCE))
        heads.append(in_ids[0, starts])
        tails.append(out_ids[T - 1, targets])
        heads.append(np.full(len(targets), SINK))
        if self.surplus:
            non_target = np.setdiff1d(nodes, targets)
            tails.append(out_ids[T - 1, non_target])
            heads.append(np.full(len(non_target), PARK))
            tails.append(np.full(self.surplus, PARK))
            heads.append(np.full(self.surplus, SINK))
        self.net = FlowNetwork.from_arrays(
            n_vertices, SOURCE, SINK, np.concatenate(tails), np.concatenate(heads))

    def in_id(self, t: int, v: int) -> int:
        return self.base + 2 * (t * self.V + v)

    def out_id(self, t: int, v: int) -> int:
        return self.base + 2 * (t * self.V + v) + 1

    def decode(self, vertex: int) -> tuple[str, int, int]:
        """``(kind, t, v)`` for a layer vertex; kind is ``in`` or ``out``."""
        if vertex < self.base:
            raise InputError(f"vertex {vertex} is not a layer vertex")
        k, side = divmod(vertex - self.base, 2)
        t, v = divmod(k, self.V)
        return ("out" if side else "in"), t, v

    @property
    def n_vertices(self) -> int:
        return self.net.n

    @property
    def value(self) -> int:
        return self.net.value

    def _flow_successor(self, u: int) -> int:
        net = self.net
        for a in net.out_arcs_of(u):
            if not a & 1 and net.cap[a] == 0:
                return net.head[a]
        raise ContractError(f"flow stops at vertex {u}")

    def paths(self) -> list[list[int]]:
        """Decompose the current flow into node sequences of length T+1."""
        net = self.net
        out = []
        for a in net.out_arcs_of(SOURCE):
            if a & 1 or net.cap[a] != 0:
                continue
            u = net.head[a]
            _, _, v = self.decode(u)
            seq = [v]
            while True:
                w = self._flow_successor(u)  # out(t, .)
                _, t, x = self.decode(w)
                seq.append(x)
                if t == self.T - 1:
                    break
                u = self._flow_successor(w)  # in(t+1, x)
            out.append(seq)
        return out

    def install(self, path: list[int]):
        """Push one unit along a node sequence of length T+1 (arcs must be free)."""
        if len(path) != self.T + 1:
            raise ContractError("path length does not match the horizon")
        net = self.net
        arcs = [net.find_arc(SOURCE, self.in_id(0, path[0]))]
        for t in range(self.T):
            arcs.append(net.find_arc(self.in_id(t, path[t]), self.out_id(t, path[t + 1])))
            if t + 1 < self.T:
                arcs.append(net.find_arc(self.out_id(t, path[t + 1]), self.in_id(t + 1, path[t + 1])))
        last = self.out_id(self.T - 1, path[-1])
        a = net.find_arc(last, SINK)
        if a < 0:
            park = net.find_arc(last, PARK) if self.surplus else -1
            arcs += [park, net.find_arc(PARK, SINK) if park >= 0 else -1]
        else:
            arcs.append(a)
        if any(a < 0 for a in arcs):
            raise ContractError(f"cannot install path {path}")
        for a in arcs:
            net.push(a)
        net.value += 1


def build_network(instance: Instance, T: int) -> TimeExpandedNetwork:
    return TimeExpandedNetwork(instance, T)


def compute_prune_table(instance: Instance) -> list[int]:
    """λ(v): distance from v to its nearest target."""
    return bfs_distances(instance.graph, instance.targets)


def _prune_mask(ten: TimeExpandedNetwork, lam: list[int]) -> bytearray:
    """Block ``out(t, v)`` when ``t + λ(v) >= T``: no target is reachable in time."""
    T, V = ten.T, ten.V
    lam_arr = np.asarray(lam, dtype=np.int64)
    t = np.arange(T, dtype=np.int64)[:, None]
    blocked = (t + lam_arr[None, :]) >= T
    mask = np.zeros(ten.n_vertices, dtype=np.uint8)
    out_ids = ten.base + 2 * (t * V + np.arange(V)[None, :]) + 1
    mask[out_ids[blocked]] = 1
    return bytearray(mask.tobytes())


def feasible(instance: Instance, T: int, use_prune: bool = True,
             reuse_from: Optional[TimeExpandedNetwork] = None,
             lam: Optional[list[int]] = None, deadline: Optional[float] = None
             ) -> tuple[TimeExpandedNetwork, bool]:
    """Max flow on N(T); feasible iff every agent is routed.

    Pruning is skipped when surplus agents exist, since they may end anywhere.
    """
    if reuse_from is not None and (reuse_from.instance is not instance or reuse_from.T != T - 1):
        raise ContractError("reuse state must come from horizon T-1 of the same instance")
    ten = TimeExpandedNetwork(instance, T)
    if reuse_from is not None:
        for p in reuse_from.paths():
            ten.install(p + [p[-1]])
    mask = None
    if use_prune and not ten.surplus:
        mask = _prune_mask(ten, lam if lam is not None else compute_prune_table(instance))
    net = ten.net
    need = instance.n_agents
    while net.value < need:
        if deadline is not None and time.monotonic() > deadline:
            raise SolverTimeout(f"timed out at horizon {T}", last_horizon=T)
        if not net.augment(mask):
            break
    return ten, net.value == need


def conservative_lower_bound(instance: Instance) -> int:
    """Max over agents of the heuristic distance to the nearest target.

    With surplus agents only the target side is sound: every target needs
    some agent, so max over targets of the nearest start is used instead.
    """
    h = instance.graph.heuristic
    S, G = instance.starts, instance.targets
    if not G:
        return 0
    if len(S) == len(G):
        return max(min(h(s, g) for g in G) for s in S)
    return max(min(h(s, g) for s in S) for g in G)


def bottleneck_lower_bound(instance: Instance) -> int:
    return assign_bottleneck(instance).bottleneck_cost


def resolve_swap_conflicts(plan: Plan) -> Plan:
    """Exchange path suffixes of agents that would swap along an edge."""
    paths = [list(p) for p in plan.paths]
    if not paths:
        return Plan(paths)
    horizon = len(paths[0]) - 1
    for t in range(horizon + 1):
        if len({p[t] for p in paths}) != len(paths):
            raise ContractError(f"vertex conflict at timestep {t}")
    for t in range(horizon):
        moving = {(p[t], p[t + 1]): i for i, p in enumerate(paths) if p[t] != p[t + 1]}
        for (a, b), i in list(moving.items()):
            j = moving.get((b, a))
            if j is None or moving.get((a, b)) != i:
                continue
            paths[i][t + 1:], paths[j][t + 1:] = paths[j][t + 1:], paths[i][t + 1:]
            del moving[(a, b)], moving[(b, a)]
    return Plan(paths, list(plan.events))


def advance_moves(plan: Plan) -> Plan:
    """Pull each move forward over a preceding wait when the cell is free.

    A wait at ``x`` followed by a move to ``y`` becomes a move then a wait
    whenever nobody occupies ``y`` at that earlier timestep. Validity and the
    makespan are preserved; sum-of-costs never grows.
    """
    paths = [list(p) for p in plan.paths]
    if not paths:
        return Plan(paths, list(plan.events))
    horizon = len(paths[0]) - 1
    occupied = [dict() for _ in range(horizon + 1)]
    for i, p in enumerate(paths):
        for t, v in enumerate(p):
            occupied[t][v] = i
    changed = True
    while changed:
        changed = False
        for i, p in enumerate(paths):
            for t in range(horizon - 1):
                x, y = p[t], p[t + 2]
                if p[t + 1] == x and y != x and y not in occupied[t + 1]:
                    del occupied[t + 1][x]
                    occupied[t + 1][y] = i
                    p[t + 1] = y
                    changed = True
    return Plan(paths, list(plan.events))


@dataclass
class OptimalResult:
    plan: Plan
    makespan: int
    lower_bound: int
    lb_mode: str
    diagnostics: list = field(default_factory=list)  # (T, flow, augmentations, pruned_hits)

    def diagnostics_csv(self) -> str:
        rows = ["T,flow,augmentations,pruned_expansions"]
        rows += [",".join(map(str, r)) for r in self.diagnostics]
        return "\n".join(rows) + "\n"


def _order_paths(instance: Instance, paths: list[list[int]]) -> list[list[int]]:
    by_start = {p[0]: p for p in paths}
    return [by_start[s] for s in instance.starts]


def solve_optimal(instance: Instance, lb_mode: Optional[str] = None, use_prune: bool = True,
                  use_reuse: bool = True, timeout: Optional[float] = 300.0,
                  agent_threshold: int = 1000) -> OptimalResult:
    """Smallest horizon with a full flow, searched T = LB, LB+1, ...

    ``lb_mode`` is ``"conservative"`` or ``"bottleneck"``; by default the
    bottleneck bound is used below ``agent_threshold`` agents.
    """
    started = time.monotonic()
    deadline = started + timeout if timeout is not None else None
    if lb_mode is None:
        lb_mode = "bottleneck" if instance.n_agents < agent_threshold else "conservative"
    if lb_mode not in ("conservative", "bottleneck"):
        raise InputError(f"unknown lower bound mode {lb_mode!r}")
    if set(instance.targets) <= set(instance.starts):
        return OptimalResult(Plan([[s] for s in instance.starts]), 0, 0, lb_mode)
    lb = conservative_lower_bound(instance) if lb_mode == "conservative" \
        else bottleneck_lower_bound(instance)
    lam = compute_prune_table(instance) if use_prune else None
    T = max(lb, 1)
    prev = None
    diagnostics = []
    while True:
        try:
            ten, ok = feasible(instance, T, use_prune, prev if use_reuse else None, lam, deadline)
        except SolverTimeout as e:
            e.elapsed = time.monotonic() - started
            raise
        net = ten.net
        diagnostics.append((T, net.value, net.augmentations, net.pruned_hits))
        if ok:
            break
        prev = ten
        T += 1
        if deadline is not None and time.monotonic() > deadline:
            raise SolverTimeout(f"timed out after horizon {T - 1}", last_horizon=T - 1,
                                elapsed=time.monotonic() - started)
    raw = Plan(_order_paths(instance, ten.paths()))
    return OptimalResult(advance_moves(resolve_swap_conflicts(raw)), T, lb, lb_mode, diagnostics)
