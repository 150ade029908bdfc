"""Instances, MovingAI map I/O, random generation, plan validation and metrics."""
from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from anonmapf.errors import CapacityError, ContractError, InputError, MapParseError
from anonmapf.graph import Graph, connected_components, grid_graph

PASSABLE = frozenset(".G")
OBSTACLES = frozenset("@TOW")


@dataclass(frozen=True)
class Instance:
    graph: Graph
    starts: tuple[int, ...]
    targets: tuple[int, ...]
    seed: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "starts", tuple(int(s) for s in self.starts))
        object.__setattr__(self, "targets", tuple(int(g) for g in self.targets))
        n = self.graph.n_nodes
        for v in self.starts + self.targets:
            if not 0 <= v < n:
                raise InputError(f"node {v} is not in the graph")
        if len(set(self.starts)) != len(self.starts):
            raise InputError("starts are not pairwise distinct")
        if len(set(self.targets)) != len(self.targets):
            raise InputError("targets are not pairwise distinct")
        if len(self.targets) > len(self.starts):
            raise InputError("more targets than agents")

    @property
    def n_agents(self) -> int:
        return len(self.starts)

    @property
    def n_targets(self) -> int:
        return len(self.targets)


@dataclass
class Plan:
    """Equal-length node sequences, one per agent; ``paths[i][t]`` is agent i at time t."""

    paths: list[list[int]]
    events: list = field(default_factory=list)

    @property
    def makespan(self) -> int:
        return len(self.paths[0]) - 1 if self.paths else 0

    def at(self, t: int) -> list[int]:
        return [p[t] for p in self.paths]


@dataclass(frozen=True)
class Metrics:
    makespan: int
    sum_of_costs: int
    maximum_moves: int
    sum_of_moves: int

    def as_dict(self):
        return {
            "makespan": self.makespan,
            "sum_of_costs": self.sum_of_costs,
            "maximum_moves": self.maximum_moves,
            "sum_of_moves": self.sum_of_moves,
        }


@dataclass(frozen=True)
class Violation:
    kind: str  # bad-start | illegal-move | vertex-conflict | swap-conflict | target-uncovered | shape
    timestep: int
    agents: tuple[int, ...] = ()
    node: Optional[int] = None

    def __str__(self):
        who = ",".join(str(a) for a in self.agents)
        where = f" node={self.node}" if self.node is not None else ""
        return f"t={self.timestep} {self.kind} agents={who}{where}"


# -- MovingAI maps ----------------------------------------------------------

def parse_movingai_map(text: str) -> Graph:
    """Parse a MovingAI ``.map`` into a 4-connected grid graph.

    Only the largest connected component is kept (with a warning). The raw
    rows are preserved on ``graph.grid`` for round-tripping.
    """
    lines = text.splitlines()
    header: dict[str, str] = {}
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line == "map":
            break
        parts = line.split()
        if len(parts) != 2 or parts[0] not in ("type", "height", "width"):
            raise MapParseError(f"malformed header line {line!r}", i)
        header[parts[0]] = parts[1]
    else:
        raise MapParseError("missing 'map' line", len(lines))
    for key in ("type", "height", "width"):
        if key not in header:
            raise MapParseError(f"missing '{key}' header", i)
    try:
        height, width = int(header["height"]), int(header["width"])
    except ValueError:
        raise MapParseError("height/width must be integers", i) from None
    if height <= 0 or width <= 0:
        raise MapParseError("height/width must be positive", i)
    rows = lines[i:i + height]
    if len(rows) < height:
        raise MapParseError(f"expected {height} rows, found {len(rows)}", len(lines))
    passable = []
    unknown = set()
    for r, row in enumerate(rows):
        if len(row) != width:
            raise MapParseError(f"row has {len(row)} characters, expected {width}", i + r + 1)
        flags = []
        for ch in row:
            if ch in PASSABLE:
                flags.append(True)
            else:
                if ch not in OBSTACLES:
                    unknown.add(ch)
                flags.append(False)
        passable.append(flags)
    if unknown:
        warnings.warn(f"unknown map characters treated as obstacles: {''.join(sorted(unknown))!r}")
    full = grid_graph(passable, grid=list(rows))
    if full.n_nodes == 0:
        raise MapParseError("map has no passable cells", i)
    comps = connected_components(full)
    if len(comps) == 1:
        return grid_graph(passable, grid=list(rows))
    largest = max(comps, key=len)
    warnings.warn(
        f"map is disconnected ({len(comps)} components); keeping the largest "
        f"({len(largest)} of {full.n_nodes} cells)"
    )
    keep = {full.coords[v] for v in largest}
    return grid_graph(passable, grid=list(rows), keep=keep)


def format_movingai_map(graph: Graph) -> str:
    if graph.grid is None:
        raise InputError("graph was not built from a map")
    head = f"type octile\nheight {graph.height}\nwidth {graph.width}\nmap\n"
    return head + "\n".join(graph.grid) + "\n"


def load_map(path) -> Graph:
    return parse_movingai_map(Path(path).read_text())


def random_grid_map(width: int, height: int, obstacle_ratio: float = 0.2,
                    seed: Optional[int] = None) -> str:
    """MovingAI text of a random grid with ``round(ratio * cells)`` obstacles.

    Free cells cut off from the largest region are blocked too, so the map
    is connected (its obstacle share can end up slightly above the ratio).
    """
    rng = random.Random(seed)
    cells = width * height
    blocked = set(rng.sample(range(cells), round(obstacle_ratio * cells)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = ["".join("@" if y * width + x in blocked else "." for x in range(width))
                for y in range(height)]
        g = parse_movingai_map(f"type octile\nheight {height}\nwidth {width}\nmap\n"
                               + "\n".join(rows) + "\n")
    kept = {y * width + x for x, y in g.coords}
    blocked = set(range(cells)) - kept
    rows = [
        "".join("@" if y * width + x in blocked else "." for x in range(width))
        for y in range(height)
    ]
    return f"type octile\nheight {height}\nwidth {width}\nmap\n" + "\n".join(rows) + "\n"


def random_grid(width: int, height: int, obstacle_ratio: float = 0.2,
                seed: Optional[int] = None) -> Graph:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return parse_movingai_map(random_grid_map(width, height, obstacle_ratio, seed))


# -- instances --------------------------------------------------------------

def generate_random_instance(graph: Graph, n_agents: int, n_targets: Optional[int] = None,
                             seed: Optional[int] = None, name: str = "") -> Instance:
    """Uniform starts and targets, each sampled without replacement, independently."""
    if n_targets is None:
        n_targets = n_agents
    if n_agents > graph.n_nodes:
        raise CapacityError(f"{n_agents} agents do not fit on {graph.n_nodes} nodes")
    if n_targets > n_agents:
        raise InputError("n_targets must not exceed n_agents")
    if n_targets < 0 or n_agents < 0:
        raise InputError("counts must be nonnegative")
    rng = random.Random(seed)
    nodes = range(graph.n_nodes)
    starts = rng.sample(nodes, n_agents)
    targets = rng.sample(nodes, n_targets)
    return Instance(graph, tuple(starts), tuple(targets), seed=seed, name=name)


def parse_cells(graph: Graph, tokens: Sequence[str]) -> list[int]:
    """Node ids for ``x,y`` tokens (x = column, y = row)."""
    out = []
    for tok in tokens:
        try:
            x, y = (int(p) for p in tok.split(","))
        except ValueError:
            raise InputError(f"bad coordinate {tok!r}, expected x,y") from None
        out.append(graph.node_at(x, y))
    return out


def format_cell(graph: Graph, v: int) -> str:
    if graph.is_grid:
        x, y = graph.coord(v)
        return f"{x},{y}"
    return str(v)


def read_instance(path) -> Instance:
    """Read the native instance format.

    ::

        map <path relative to this file | inline>
        agents N targets M seed K          (random), or
        starts x,y x,y ...
        targets x,y x,y ...
        [MovingAI map text when map is 'inline']
    """
    path = Path(path)
    return parse_instance(path.read_text(), base=path.parent, name=path.stem)


def parse_instance(text: str, base=Path("."), name: str = "") -> Instance:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("map "):
        raise InputError("line 1 must be 'map <path-or-inline>'")
    ref = lines[0][4:].strip()
    spec_lines = []
    i = 1
    while i < len(lines) and lines[i].split()[:1] and lines[i].split()[0] in ("agents", "starts", "targets"):
        spec_lines.append(lines[i].split())
        i += 1
    if ref == "inline":
        graph = parse_movingai_map("\n".join(lines[i:]))
    else:
        p = Path(ref)
        if not p.is_absolute():
            p = Path(base) / p
        graph = load_map(p)
    starts = targets = None
    for parts in spec_lines:
        if parts[0] == "agents":
            kv = dict(zip(parts[0::2], parts[1::2]))
            try:
                n = int(kv["agents"])
                m = int(kv.get("targets", n))
                seed = int(kv.get("seed", 0))
            except (KeyError, ValueError):
                raise InputError("expected 'agents N targets M seed K'") from None
            return generate_random_instance(graph, n, m, seed, name=name)
        if parts[0] == "starts":
            starts = parse_cells(graph, parts[1:])
        elif parts[0] == "targets":
            targets = parse_cells(graph, parts[1:])
    if starts is None or targets is None:
        raise InputError("instance needs 'agents ...' or both 'starts' and 'targets'")
    return Instance(graph, tuple(starts), tuple(targets), name=name)


def format_instance(instance: Instance, map_ref: str = "inline") -> str:
    g = instance.graph
    out = [f"map {map_ref}",
           "starts " + " ".join(format_cell(g, v) for v in instance.starts),
           "targets " + " ".join(format_cell(g, v) for v in instance.targets)]
    text = "\n".join(out) + "\n"
    if map_ref == "inline":
        text += format_movingai_map(g)
    return text


# -- plans ------------------------------------------------------------------

def validate_plan(instance: Instance, plan: Plan) -> list[Violation]:
    """Every violation in ``plan``; an empty list means a valid solution."""
    out: list[Violation] = []
    paths = plan.paths
    if len(paths) != instance.n_agents:
        return [Violation("shape", 0, ())]
    if not paths or any(len(p) != len(paths[0]) or not p for p in paths):
        return [Violation("shape", 0, ())]
    graph = instance.graph
    horizon = len(paths[0]) - 1
    for i, (p, s) in enumerate(zip(paths, instance.starts)):
        if p[0] != s:
            out.append(Violation("bad-start", 0, (i,), p[0]))
    for t in range(horizon + 1):
        seen: dict[int, int] = {}
        for i, p in enumerate(paths):
            v = p[t]
            if not 0 <= v < graph.n_nodes:
                out.append(Violation("illegal-move", t, (i,), v))
                continue
            if v in seen:
                out.append(Violation("vertex-conflict", t, (seen[v], i), v))
            else:
                seen[v] = i
        if t == horizon:
            break
        moves = {}
        for i, p in enumerate(paths):
            a, b = p[t], p[t + 1]
            if a != b:
                if not (0 <= a < graph.n_nodes) or b not in graph.adj[a]:
                    out.append(Violation("illegal-move", t, (i,), b))
                    continue
                moves[(a, b)] = i
        for (a, b), i in moves.items():
            j = moves.get((b, a))
            if j is not None and i < j:
                out.append(Violation("swap-conflict", t, (i, j), a))
    final = {p[horizon] for p in paths}
    for g in instance.targets:
        if g not in final:
            out.append(Violation("target-uncovered", horizon, (), g))
    return out


def compute_metrics(instance: Instance, plan: Plan) -> Metrics:
    if validate_plan(instance, plan):
        raise ContractError("metrics requested for an invalid plan")
    horizon = plan.makespan
    soc = 0
    moves = []
    for p in plan.paths:
        last = 0
        for t in range(horizon, 0, -1):
            if p[t] != p[t - 1]:
                last = t
                break
        soc += last
        moves.append(sum(1 for t in range(horizon) if p[t] != p[t + 1]))
    return Metrics(horizon, soc, max(moves, default=0), sum(moves))


def format_plan(plan: Plan, metrics: Optional[Metrics] = None) -> str:
    """CSV: a ``#`` metrics line, a ``t,a0,a1,...`` header, one row per timestep."""
    lines = []
    if metrics is not None:
        lines.append("# " + " ".join(f"{k}={v}" for k, v in metrics.as_dict().items()))
    lines.append(",".join(["t"] + [f"a{i}" for i in range(len(plan.paths))]))
    for t in range(plan.makespan + 1):
        lines.append(",".join([str(t)] + [str(p[t]) for p in plan.paths]))
    return "\n".join(lines) + "\n"


def parse_plan(text: str) -> Plan:
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows or not rows[0].startswith("t"):
        raise InputError("plan file needs a 't,a0,...' header")
    n = len(rows[0].split(",")) - 1
    paths: list[list[int]] = [[] for _ in range(n)]
    for k, row in enumerate(rows[1:]):
        cells = row.split(",")
        if len(cells) != n + 1:
            raise InputError(f"plan row {k} has {len(cells) - 1} agents, expected {n}")
        try:
            if int(cells[0]) != k:
                raise InputError(f"plan row {k} has timestep {cells[0]}")
            for i, c in enumerate(cells[1:]):
                paths[i].append(int(c))
        except ValueError:
            raise InputError(f"non-integer cell in plan row {k}") from None
    if not rows[1:]:
        raise InputError("plan has no timesteps")
    return Plan(paths)
