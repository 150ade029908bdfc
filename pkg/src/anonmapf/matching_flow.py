"""Bipartite matching and unit-capacity flow primitives.

``augment_once`` keeps an alternating search forest cached on the matching,
so a sequence of edge insertions followed by single augmentations costs
O(E') per successful augmentation instead of per call.
"""
from __future__ import annotations

import heapq
from array import array
from collections import deque
from typing import Callable, Hashable, Iterable, Optional, Union

import numpy as np

from anonmapf import _backend
from anonmapf.errors import ContractError, InfeasibleError, InputError


class BipartiteGraph:
    def __init__(self, left: Iterable[Hashable] = (), right: Iterable[Hashable] = ()):
        self.left = list(left)
        self.right = list(right)
        self.adj: dict = {s: [] for s in self.left}
        self.radj: dict = {g: [] for g in self.right}
        self.edges: list[tuple] = []
        self._cost: dict = {}

    def add_edge(self, s, g, cost: int = 0):
        if (s, g) in self._cost:
            raise InputError(f"duplicate edge ({s!r}, {g!r})")
        if cost < 0:
            raise InputError("edge costs must be nonnegative")
        if s not in self.adj:
            self.left.append(s)
            self.adj[s] = []
        if g not in self.radj:
            self.right.append(g)
            self.radj[g] = []
        self.adj[s].append(g)
        self.radj[g].append(s)
        self.edges.append((s, g, cost))
        self._cost[(s, g)] = cost

    def has_edge(self, s, g) -> bool:
        return (s, g) in self._cost

    def cost(self, s, g) -> int:
        return self._cost[(s, g)]


class Matching:
    def __init__(self, pairs: Iterable[tuple] = ()):
        self.left_mate: dict = {}
        self.right_mate: dict = {}
        self.version = 0
        self._forest = None
        for s, g in pairs:
            self._link(s, g)

    def _link(self, s, g):
        if s in self.left_mate or g in self.right_mate:
            raise ContractError(f"({s!r}, {g!r}) reuses a matched vertex")
        self.left_mate[s] = g
        self.right_mate[g] = s
        self.version += 1

    @property
    def pairs(self) -> set:
        return set(self.left_mate.items())

    def __len__(self):
        return len(self.left_mate)

    def cost(self, bg: BipartiteGraph) -> int:
        return sum(bg.cost(s, g) for s, g in self.left_mate.items())


class _Forest:
    """Alternating reachability from free left vertices; valid for one matching version."""

    def __init__(self, bg: BipartiteGraph, m: Matching):
        self.bg = bg
        self.version = m.version
        self.seen_edges = len(bg.edges)
        self.seen_lefts = len(bg.left)
        self.reached_left: set = set()
        self.parent: dict = {}  # right -> left that reached it

    def grow(self, m: Matching, lefts: Iterable) -> Optional[Hashable]:
        """Extend the forest from ``lefts``; return a reached free right vertex, if any."""
        adj = self.bg.adj
        todo = deque()
        for x in lefts:
            if x not in self.reached_left:
                self.reached_left.add(x)
                todo.append(x)
        while todo:
            x = todo.popleft()
            for g in adj[x]:
                if g in self.parent or m.left_mate.get(x) == g:
                    continue
                self.parent[g] = x
                y = m.right_mate.get(g)
                if y is None:
                    return g
                if y not in self.reached_left:
                    self.reached_left.add(y)
                    todo.append(y)
        return None

    def grow_edge(self, m: Matching, s, g) -> Optional[Hashable]:
        if s not in self.reached_left or g in self.parent or m.left_mate.get(s) == g:
            return None
        self.parent[g] = s
        y = m.right_mate.get(g)
        if y is None:
            return g
        return self.grow(m, [y])


def _flip(m: Matching, forest: _Forest, g):
    while True:
        x = forest.parent[g]
        prev = m.left_mate.get(x)
        m.left_mate[x] = g
        m.right_mate[g] = x
        if prev is None:
            break
        g = prev
    m.version += 1
    m._forest = None


def augment_once(bg: BipartiteGraph, m: Matching) -> tuple[Matching, bool]:
    """Grow ``m`` by one augmenting path if one exists; returns ``(m, grew)``.

    ``m`` is updated in place. The search forest is reused across calls as
    long as the matching is unchanged and ``bg`` only gained edges.
    """
    f = m._forest
    found = None
    if f is None or f.bg is not bg or f.version != m.version:
        for s, g in m.left_mate.items():
            if not bg.has_edge(s, g):
                raise ContractError(f"matched pair ({s!r}, {g!r}) is not an edge")
        f = _Forest(bg, m)
        m._forest = f
        found = f.grow(m, [s for s in bg.left if s not in m.left_mate])
    else:
        for s, g, _ in bg.edges[f.seen_edges:]:
            found = f.grow_edge(m, s, g)
            if found is not None:
                break
        f.seen_edges = len(bg.edges)
        if found is None and len(bg.left) > f.seen_lefts:
            # lefts added after the forest was built are free roots
            found = f.grow(m, bg.left[f.seen_lefts:])
        f.seen_lefts = len(bg.left)
    if found is None:
        return m, False
    _flip(m, f, found)
    return m, True


def maximum_matching(bg: BipartiteGraph, m: Optional[Matching] = None) -> Matching:
    m = m if m is not None else Matching()
    grew = True
    while grew:
        m, grew = augment_once(bg, m)
    return m


def min_cost_max_matching(bg: BipartiteGraph, require_right_saturated: bool = True) -> Matching:
    """Maximum-cardinality matching of minimum total cost (successive shortest paths).

    Dijkstra with node potentials; every free left vertex is a source. Ties
    are broken by vertex insertion order, so results are deterministic.
    """
    L = list(bg.left)
    R = list(bg.right)
    ri = {g: i for i, g in enumerate(R)}
    nl = len(L)
    adj = [[(ri[g], bg.cost(s, g)) for g in bg.adj[s]] for s in L]
    cost_of = [dict(row) for row in adj]
    mate_l = [-1] * nl
    mate_r = [-1] * len(R)
    pot = [0] * (nl + len(R))  # lefts then rights
    INF = float("inf")
    for _ in range(min(nl, len(R))):
        dist = [INF] * (nl + len(R))
        parent = [-1] * len(R)
        done = [False] * (nl + len(R))
        heap = []
        for i in range(nl):
            if mate_l[i] < 0:
                dist[i] = 0
                heap.append((0, i))
        heapq.heapify(heap)
        best = -1
        bound = INF
        settled = []
        while heap:
            d, u = heapq.heappop(heap)
            if done[u] or d > dist[u]:
                continue
            if d > bound:
                break
            done[u] = True
            settled.append(u)
            if u >= nl:
                j = u - nl
                if mate_r[j] < 0:
                    if best < 0 or (d, j) < (bound, best):
                        best, bound = j, d
                    continue
                x = mate_r[j]
                nd = d - cost_of[x][j] + pot[u] - pot[x]
                if nd < dist[x]:
                    dist[x] = nd
                    heapq.heappush(heap, (nd, x))
                continue
            pu = pot[u]
            for j, c in adj[u]:
                if mate_l[u] == j:
                    continue
                v = nl + j
                nd = d + c + pu - pot[v]
                if nd < dist[v]:
                    dist[v] = nd
                    parent[j] = u
                    heapq.heappush(heap, (nd, v))
        if best < 0:
            break
        for u in settled:
            pot[u] += min(dist[u], bound)
        settled_set = set(settled)
        for u in range(nl + len(R)):
            if u not in settled_set:
                pot[u] += bound
        j = best
        while True:
            x = parent[j]
            prev = mate_l[x]
            mate_l[x] = j
            mate_r[j] = x
            if prev < 0:
                break
            j = prev
    m = Matching((L[i], R[j]) for i, j in enumerate(mate_l) if j >= 0)
    if require_right_saturated and len(m) < len(R):
        raise InfeasibleError(f"only {len(m)} of {len(R)} right vertices can be matched")
    return m


# -- unit-capacity flow networks ---------------------------------------------

class FlowNetwork:
    """Directed unit-capacity network stored as paired residual arcs.

    Arc ``2k`` is the k-th added arc, ``2k+1`` its reverse. ``cap`` holds
    residual capacities, so a forward arc carries flow iff ``cap[2k] == 0``.
    Call :meth:`finalize` (done implicitly) before searching.
    """

    def __init__(self, n_vertices: int, source: int, sink: int):
        if source == sink:
            raise InputError("source and sink must differ")
        if not (0 <= source < n_vertices and 0 <= sink < n_vertices):
            raise InputError("source/sink out of range")
        self.n = n_vertices
        self.source = source
        self.sink = sink
        self._tails: list[int] = []
        self._heads: list[int] = []
        self.head = None
        self.cap = None
        self.first_out = None
        self.out_arcs = None
        self.value = 0
        self.augmentations = 0
        self.expansions = 0
        self.pruned_hits = 0

    @classmethod
    def from_arrays(cls, n_vertices: int, source: int, sink: int, tails, heads) -> "FlowNetwork":
        net = cls(n_vertices, source, sink)
        net._build(np.asarray(tails, dtype=np.int32), np.asarray(heads, dtype=np.int32))
        return net

    def add_arc(self, u: int, v: int) -> int:
        if self.head is not None:
            raise ContractError("network already finalized")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise InputError(f"arc ({u},{v}) out of range")
        self._tails.append(u)
        self._heads.append(v)
        return 2 * (len(self._tails) - 1)

    def finalize(self):
        if self.head is None:
            self._build(np.asarray(self._tails, dtype=np.int32),
                        np.asarray(self._heads, dtype=np.int32))
        return self

    def _build(self, tails, heads):
        m = len(tails)
        head = np.empty(2 * m, dtype=np.int32)
        head[0::2] = heads
        head[1::2] = tails
        tail = np.empty(2 * m, dtype=np.int32)
        tail[0::2] = tails
        tail[1::2] = heads
        cap = np.zeros(2 * m, dtype=np.int32)
        cap[0::2] = 1
        order = np.argsort(tail, kind="stable").astype(np.int32)
        counts = np.bincount(tail, minlength=self.n)
        first_out = np.zeros(self.n + 1, dtype=np.int32)
        np.cumsum(counts, out=first_out[1:])
        self.head = array("i", head.tobytes())
        self.cap = array("i", cap.tobytes())
        self.first_out = array("i", first_out.tobytes())
        self.out_arcs = array("i", order.tobytes()) if m else array("i", [0])
        n = self.n
        self._mark = array("i", [0]) * n
        self._stamp = 0
        self._parent = array("i", [0]) * n
        self._stack = array("i", [0]) * n
        self._pos = array("i", [0]) * n
        self._no_block = bytearray(n)
        self._tails = self._heads = None

    @property
    def n_arcs(self) -> int:
        return len(self.head) // 2 if self.head is not None else len(self._tails)

    def tail_of(self, arc: int) -> int:
        return self.head[arc ^ 1]

    def flow(self, arc: int) -> int:
        """Flow on forward arc ``arc`` (0 or 1)."""
        return 1 - self.cap[arc]

    def out_arcs_of(self, v: int):
        self.finalize()
        return [self.out_arcs[i] for i in range(self.first_out[v], self.first_out[v + 1])]

    def find_arc(self, u: int, v: int) -> int:
        """Forward arc ``u -> v`` with free capacity (first in CSR order); -1 if none."""
        for a in self.out_arcs_of(u):
            if not a & 1 and self.head[a] == v and self.cap[a] > 0:
                return a
        return -1

    def push(self, arc: int):
        """Send one unit along forward arc ``arc`` (no path check)."""
        if arc & 1 or self.cap[arc] <= 0:
            raise ContractError(f"arc {arc} has no residual capacity")
        self.cap[arc] -= 1
        self.cap[arc ^ 1] += 1

    def augment(self, blocked: Optional[bytearray] = None) -> bool:
        self.finalize()
        self._stamp += 1
        found, expanded, hits = _backend.kernels.augment(
            self.first_out, self.out_arcs, self.head, self.cap, self.source, self.sink,
            blocked if blocked is not None else self._no_block,
            self._mark, self._stamp, self._parent, self._stack, self._pos)
        self.expansions += expanded
        self.pruned_hits += hits
        if found:
            self.value += 1
            self.augmentations += 1
        return bool(found)

    def recount(self) -> int:
        """Recompute the flow value from arc flows out of the source."""
        self.value = sum(self.flow(a) for a in self.out_arcs_of(self.source) if not a & 1)
        return self.value

    def check_conservation(self) -> bool:
        self.finalize()
        bal = [0] * self.n
        for a in range(0, len(self.head), 2):
            f = self.flow(a)
            if f < 0 or f > 1:
                return False
            bal[self.head[a ^ 1]] -= f
            bal[self.head[a]] += f
        return all(b == 0 for i, b in enumerate(bal) if i not in (self.source, self.sink))


Prune = Union[None, bytearray, Callable[[int], bool]]


def prune_mask(net: FlowNetwork, prune: Prune) -> Optional[bytearray]:
    if prune is None or isinstance(prune, (bytes, bytearray)):
        return prune
    mask = bytearray(net.n)
    for v in range(net.n):
        if v not in (net.source, net.sink) and prune(v):
            mask[v] = 1
    return mask


def max_flow(net: FlowNetwork, prune: Prune = None) -> int:
    """Augment until no path remains; returns the total flow value.

    Residual state stays in ``net`` so a caller can add flow later. ``prune``
    (a predicate or byte mask) marks vertices the path search never enters;
    a sound predicate leaves the value unchanged.
    """
    net.finalize()
    mask = prune_mask(net, prune)
    while net.augment(mask):
        pass
    return net.value
