"""Undirected graphs, the memoizing/lazy BFS distance oracle, and ``next_node``."""
from __future__ import annotations

from array import array
from collections import deque
from typing import Iterable, Optional, Sequence

from anonmapf import _backend
from anonmapf.errors import InputError


class Graph:
    """Immutable undirected graph with nodes ``0..n-1``.

    Grid graphs also carry ``coords[v] = (x, y)`` (x = column, y = row), the
    grid size and the raw map rows. Node ids of grids follow row-major order.
    """

    def __init__(
        self,
        adjacency: Sequence[Iterable[int]],
        coords: Optional[Sequence[tuple[int, int]]] = None,
        width: Optional[int] = None,
        height: Optional[int] = None,
        grid: Optional[list[str]] = None,
        check_connected: bool = True,
    ):
        n = len(adjacency)
        adj = []
        for v, nbrs in enumerate(adjacency):
            row = sorted(nbrs)
            if len(set(row)) != len(row):
                raise InputError(f"duplicate edge at node {v}")
            for u in row:
                if u == v:
                    raise InputError(f"self-loop at node {v}")
                if not 0 <= u < n:
                    raise InputError(f"neighbor {u} of node {v} out of range")
            adj.append(tuple(row))
        for v, row in enumerate(adj):
            for u in row:
                if v not in adj[u]:
                    raise InputError(f"edge ({v},{u}) has no reverse")
        if n == 0:
            raise InputError("graph has no nodes")
        self.adj = tuple(adj)
        self.n_nodes = n
        self.n_edges = sum(len(r) for r in adj) // 2
        self.coords = tuple(coords) if coords is not None else None
        self.width = width
        self.height = height
        self.grid = list(grid) if grid is not None else None
        self._cell_to_node = (
            {c: i for i, c in enumerate(self.coords)} if self.coords is not None else None
        )
        indptr = [0]
        indices: list[int] = []
        for row in adj:
            indices.extend(row)
            indptr.append(len(indices))
        self.xs = array("i", [c[0] for c in self.coords] if self.coords else [])
        self.ys = array("i", [c[1] for c in self.coords] if self.coords else [])
        self.indptr = array("i", indptr)
        self.indices = array("i", indices) if indices else array("i", [0])
        if check_connected and len(connected_components(self)) != 1:
            raise InputError("graph is not connected")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], **kw) -> "Graph":
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        return cls(adj, **kw)

    @property
    def is_grid(self) -> bool:
        return self.coords is not None

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adj[v]

    def node_at(self, x: int, y: int) -> int:
        if self._cell_to_node is None:
            raise InputError("graph has no grid coordinates")
        try:
            return self._cell_to_node[(x, y)]
        except KeyError:
            raise InputError(f"cell ({x},{y}) is not a passable node") from None

    def coord(self, v: int) -> tuple[int, int]:
        if self.coords is None:
            raise InputError("graph has no grid coordinates")
        return self.coords[v]

    def check_node(self, v) -> int:
        if not isinstance(v, int) or not 0 <= v < self.n_nodes:
            raise InputError(f"unknown node id {v!r}")
        return v

    def heuristic(self, u: int, v: int) -> int:
        """Manhattan distance on grids, 0 elsewhere; never exceeds ``dist``."""
        if self.coords is None:
            return 0
        (x1, y1), (x2, y2) = self.coords[u], self.coords[v]
        return abs(x1 - x2) + abs(y1 - y2)

    def __repr__(self):
        kind = f"grid {self.width}x{self.height}" if self.is_grid else "graph"
        return f"<Graph {kind} |V|={self.n_nodes} |E|={self.n_edges}>"


def grid_graph(passable: Sequence[Sequence[bool]], grid: Optional[list[str]] = None,
               keep: Optional[set[tuple[int, int]]] = None) -> Graph:
    """4-connected grid over passable cells (optionally only the cells in ``keep``)."""
    height = len(passable)
    width = len(passable[0]) if height else 0
    cells = [
        (x, y)
        for y in range(height)
        for x in range(width)
        if passable[y][x] and (keep is None or (x, y) in keep)
    ]
    index = {c: i for i, c in enumerate(cells)}
    adj = []
    for x, y in cells:
        row = []
        for c in ((x, y - 1), (x - 1, y), (x + 1, y), (x, y + 1)):
            j = index.get(c)
            if j is not None:
                row.append(j)
        adj.append(row)
    return Graph(adj, coords=cells, width=width, height=height, grid=grid,
                 check_connected=False)


def connected_components(graph: Graph) -> list[list[int]]:
    seen = [False] * graph.n_nodes
    comps = []
    for root in range(graph.n_nodes):
        if seen[root]:
            continue
        seen[root] = True
        comp = [root]
        q = deque([root])
        while q:
            u = q.popleft()
            for v in graph.adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    q.append(v)
        comps.append(sorted(comp))
    return comps


class _Tree:
    """Resumable BFS rooted at one node. ``state = [head, tail, scan cursor]``."""

    __slots__ = ("dist", "queue", "state")

    def __init__(self, n: int, root: int):
        self.dist = _backend.int_buffer(n, -1)
        self.queue = _backend.int_buffer(n, 0)
        self.dist[root] = 0
        self.queue[0] = root
        self.state = array("i", [0, 1, 0])

    @property
    def complete(self) -> bool:
        return self.state[0] >= self.state[1]


class DistanceOracle:
    """Shortest-path hop counts with per-root memoized, resumable BFS trees.

    ``dist`` completes the BFS rooted at the query target on first use;
    ``dist_lazy`` resumes it only until the source is discovered. Both share
    the same trees, so answers never disagree. ``expansions`` counts nodes
    popped from BFS queues over the oracle's lifetime. Not thread-safe.
    """

    def __init__(self, graph: Graph):
        self.graph = graph
        self.expansions = 0
        self._trees: dict[int, _Tree] = {}

    def _tree(self, root: int) -> _Tree:
        t = self._trees.get(root)
        if t is None:
            t = self._trees[root] = _Tree(self.graph.n_nodes, root)
        return t

    def _check(self, u, v):
        n = self.graph.n_nodes
        if not (isinstance(u, int) and 0 <= u < n):
            raise InputError(f"unknown node id {u!r}")
        if not (isinstance(v, int) and 0 <= v < n):
            raise InputError(f"unknown node id {v!r}")

    def table(self, root: int):
        """Complete distance table from ``root`` (a buffer indexed by node)."""
        self.graph.check_node(root)
        t = self._tree(root)
        if not t.complete:
            self.expansions += _backend.kernels.bfs_run(
                self.graph.indptr, self.graph.indices, t.dist, t.queue, t.state, -1)
        return t.dist

    def dist(self, u: int, v: int) -> int:
        self._check(u, v)
        return self.table(v)[u]

    def dist_lazy(self, u: int, v: int) -> int:
        t = self._trees.get(v)
        if t is not None and type(u) is int and 0 <= u < self.graph.n_nodes:
            d = t.dist[u]
            if d >= 0:
                return d
        self._check(u, v)
        t = self._tree(v)
        d = t.dist[u]
        if d < 0:
            self.expansions += _backend.kernels.bfs_run(
                self.graph.indptr, self.graph.indices, t.dist, t.queue, t.state, u)
            d = t.dist[u]
        return d

    def known(self, u: int, v: int) -> Optional[int]:
        """Distance if already discovered by the tree rooted at ``v``, else None."""
        t = self._trees.get(v)
        if t is None or t.dist[u] < 0:
            return None
        return t.dist[u]

    def scan_marked(self, root: int, marks: bytearray) -> int:
        """Next node with ``marks[node]`` in BFS discovery order from ``root``; -1 when exhausted."""
        t = self._tree(root)
        node, expanded = _backend.kernels.bfs_scan(
            self.graph.indptr, self.graph.indices, t.dist, t.queue, t.state, marks)
        self.expansions += expanded
        return node

    def bank(self, roots: Sequence[int]):
        """Parallel ``(dists, queues, states)`` lists of the trees at ``roots`` (created if needed)."""
        for r in roots:
            self.graph.check_node(r)
        trees = [self._tree(r) for r in roots]
        return [t.dist for t in trees], [t.queue for t in trees], [t.state for t in trees]

    def heuristic(self, u: int, v: int) -> int:
        self._check(u, v)
        return self.graph.heuristic(u, v)

    def next_node(self, u: int, w: int) -> int:
        """Argmin of ``dist(., w)`` over ``N(u) + {u}``; ties go to the smallest id."""
        d = self.dist_lazy(u, w)
        if d == 0:
            return u
        # every node closer to w than u was discovered before u was
        dist = self._trees[w].dist
        for x in self.graph.adj[u]:  # ascending ids
            if dist[x] == d - 1:
                return x
        raise AssertionError("BFS tree lost a predecessor")

    def forget(self):
        """Drop all trees (end of a solve)."""
        self._trees.clear()


def bfs_distances(graph: Graph, sources: Iterable[int]) -> list[int]:
    """Multi-source BFS over the whole graph via the active kernel."""
    n = graph.n_nodes
    dist = _backend.int_buffer(n, -1)
    queue = _backend.int_buffer(n, 0)
    tail = 0
    for s in sources:
        if dist[s] < 0:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    state = array("i", [0, tail, 0])
    _backend.kernels.bfs_run(graph.indptr, graph.indices, dist, queue, state, -1)
    return list(dist)
