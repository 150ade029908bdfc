"""Target-swapping path planning: offline (synchronous timesteps) and online
(one atomic activation at a time under an arbitrary fair schedule).
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional

from anonmapf import _backend
from anonmapf.assignment import Assignment
from anonmapf.errors import BudgetExhausted, ContractError, InputError
from anonmapf.graph import DistanceOracle
from anonmapf.instance import Instance, Plan


@dataclass(slots=True)
class AgentState:
    id: int
    v: int
    g: int


class Effect(NamedTuple):
    kind: str  # stay | move | swap | rotate | defer
    agent: int
    src: int
    dst: int
    partners: tuple = ()
    moved: bool = False


class Engine:
    """Shared agent state plus the one-agent decision rule."""

    def __init__(self, instance: Instance, assignment: Assignment,
                 oracle: Optional[DistanceOracle] = None):
        if not assignment.complete:
            raise ContractError("assignment leaves agents without a goal")
        if len(set(assignment.goals)) != len(assignment.goals):
            raise ContractError("assignment goals are not distinct")
        if tuple(assignment.starts) != tuple(instance.starts):
            raise ContractError("assignment does not belong to this instance")
        self.instance = instance
        self.oracle = oracle or DistanceOracle(instance.graph)
        self.states = [AgentState(i, s, g) for i, (s, g) in
                       enumerate(zip(instance.starts, assignment.goals))]
        self.occ = [-1] * instance.graph.n_nodes
        for a in self.states:
            self.occ[a.v] = a.id

    # -- deadlocks --

    def detect_deadlock(self, a: AgentState) -> Optional[list[int]]:
        """Follow "who sits on my next node" from ``a``; the cycle back to ``a``, if any."""
        nxt = self.oracle.next_node
        occ, states = self.occ, self.states
        chain = [a.id]
        seen = {a.id}
        cur = a
        for _ in range(len(states)):
            if cur.v == cur.g:
                return None
            b = occ[nxt(cur.v, cur.g)]
            if b < 0:
                return None
            if b == a.id:
                return chain
            if b in seen:
                return None
            chain.append(b)
            seen.add(b)
            cur = states[b]
        return None

    def rotate(self, cycle: list[int]):
        """Each agent in the cycle takes the target of the agent behind it."""
        states = self.states
        goals = [states[i].g for i in cycle]
        for k, i in enumerate(cycle):
            states[i].g = goals[k - 1]

    # -- one decision --

    def _move(self, a: AgentState, u: int):
        self.occ[a.v] = -1
        self.occ[u] = a.id
        a.v = u

    def step_agent(self, a: AgentState, deferrable=None) -> list[Effect]:
        """Apply the decision rule to ``a``; returns the effects in order.

        ``deferrable[b]`` true lets the offline engine postpone ``a`` behind
        a blocker ``b`` that has not acted yet this timestep.
        """
        occ = self.occ
        v = a.v
        if occ[v] != a.id:
            raise ContractError(f"occupancy disagrees with agent {a.id}")
        if v == a.g:
            return [Effect("stay", a.id, v, v)]
        u = self.oracle.next_node(v, a.g)
        b = occ[u]
        if b < 0:
            occ[v] = -1
            occ[u] = a.id
            a.v = u
            return [Effect("move", a.id, v, u, (), True)]
        other = self.states[b]
        if u == other.g:
            a.g, other.g = other.g, a.g
            return [Effect("swap", a.id, v, v, (b,))]
        if deferrable is not None and deferrable[b]:
            return [Effect("defer", a.id, v, v, (b,))]
        cycle = self.detect_deadlock(a)
        if cycle is None:
            return [Effect("stay", a.id, a.v, a.v, (b,))]
        self.rotate(cycle)
        effects = [Effect("rotate", a.id, a.v, a.v, tuple(cycle[1:]))]
        # re-evaluate once: the rotation put a one step closer to its new target
        if a.v != a.g:
            u = self.oracle.next_node(a.v, a.g)
            b = self.occ[u]
            if b < 0:
                src = a.v
                self._move(a, u)
                effects.append(Effect("move", a.id, src, u, moved=True))
            elif u == self.states[b].g:
                other = self.states[b]
                a.g, other.g = other.g, a.g
                effects.append(Effect("swap", a.id, a.v, a.v, (b,)))
        return effects

    def positions(self) -> list[int]:
        return [a.v for a in self.states]

    def all_at_goal(self) -> bool:
        return all(a.v == a.g for a in self.states)


# -- potentials -----------------------------------------------------------------

def _interior(oracle: DistanceOracle, u: int, w: int) -> list[int]:
    path = []
    x = u
    while x != w:
        x = oracle.next_node(x, w)
        if x != w:
            path.append(x)
    return path


def potential_phi(oracle: DistanceOracle, states: Iterable[AgentState]) -> int:
    """Sum of remaining distances plus targets lying strictly inside each agent's route."""
    states = list(states)
    goal_count: dict[int, int] = {}
    for b in states:
        goal_count[b.g] = goal_count.get(b.g, 0) + 1
    total = 0
    for a in states:
        total += oracle.dist_lazy(a.v, a.g)
        total += sum(goal_count.get(x, 0) for x in _interior(oracle, a.v, a.g))
    return total


def potential_psi(oracle: DistanceOracle, states: Iterable[AgentState]) -> int:
    return sum(oracle.dist_lazy(a.v, a.g) for a in states)


# -- offline ----------------------------------------------------------------------

def _timestep(engine: Engine, t: int, events: list):
    n = len(engine.states)
    # open[b]: b has neither acted nor been deferred, so others may wait on it
    open_ = [True] * n
    waiters: dict[int, list[int]] = {}
    states = engine.states
    step = engine.step_agent

    for i in range(n):
        if not open_[i]:
            continue
        work = [i]
        while work:
            x = work.pop()
            open_[x] = False
            effects = step(states[x], open_)
            e = effects[0]
            if e.kind == "defer":
                waiters.setdefault(e.partners[0], []).append(x)
                continue
            if e.kind != "move" and e.kind != "stay" or len(effects) > 1:
                events.extend((t, e) for e in effects if e.kind in ("swap", "rotate"))
            released = waiters.pop(x, None)
            if released:
                work.extend(reversed(released))


def _trim(instance: Instance, paths: list[list[int]], events: list) -> Plan:
    """Cut the plan at the first timestep where every target is occupied."""
    targets = set(instance.targets)
    horizon = len(paths[0]) - 1 if paths else 0
    for k in range(horizon + 1):
        if targets <= {p[k] for p in paths}:
            horizon = k
            break
    return Plan([p[:horizon + 1] for p in paths], [ev for ev in events if ev[0] < horizon])


def _step_limit(oracle: DistanceOracle, starts, goals) -> int:
    # phi_0 bounds the number of timesteps
    return sum(oracle.dist_lazy(s, g) + len(starts) for s, g in zip(starts, goals)) + 1


class _Snapshot:
    """Read-only agent view handed to offline monitors."""

    def __init__(self, pos, goal, oracle):
        self.states = [AgentState(i, v, g) for i, (v, g) in enumerate(zip(pos, goal))]
        self.oracle = oracle


def solve_offline(instance: Instance, assignment: Assignment,
                  oracle: Optional[DistanceOracle] = None, monitor=None) -> Plan:
    """Repeat one-timestep planning with target swapping until all goals are reached.

    Within a timestep agents act in id order, except that an agent whose next
    node holds a not-yet-acted agent waits for it and acts right after it.
    The plan is cut at the first timestep where every target is occupied.
    ``monitor(t, view)`` is called at t=0 and after every timestep; ``view.states``
    lists the agents. ``plan.events`` holds ``(t, Effect)`` for swaps and rotations.
    """
    engine = Engine(instance, assignment, oracle)  # validates the assignment
    oracle = engine.oracle
    graph = instance.graph
    goals = sorted(set(assignment.goals))
    tree_of = _backend.int_buffer(graph.n_nodes, -1)
    for k, g in enumerate(goals):
        tree_of[g] = k
    bank = oracle.bank(goals)
    pos = _backend.int_buffer_from(instance.starts)
    goal = _backend.int_buffer_from(assignment.goals)
    occ = _backend.int_buffer_from(engine.occ)
    paths = [[s] for s in instance.starts]
    events: list = []
    if monitor:
        monitor(0, _Snapshot(pos, goal, oracle))
    limit = _step_limit(oracle, instance.starts, assignment.goals)
    timestep = _backend.kernels.tswap_timestep
    t = 0
    while pos != goal:
        raw: list = []
        oracle.expansions += timestep(graph.indptr, graph.indices, pos, goal, occ, tree_of,
                                      *bank, raw)
        events.extend((t, Effect(kind, x, v, v, partners)) for kind, x, v, partners in raw)
        t += 1
        for p, v in zip(paths, pos):
            p.append(v)
        if monitor:
            monitor(t, _Snapshot(pos, goal, oracle))
        if t > limit:
            raise RuntimeError("offline planning failed to converge")
    return _trim(instance, paths, events)


def solve_offline_stepwise(instance: Instance, assignment: Assignment,
                           oracle: Optional[DistanceOracle] = None, monitor=None) -> Plan:
    """Same plan as :func:`solve_offline`, driven agent by agent through :class:`Engine`.

    Slower; kept as an object-level reference for cross-checking the kernels.
    """
    engine = Engine(instance, assignment, oracle)
    paths = [[s] for s in instance.starts]
    events: list = []
    if monitor:
        monitor(0, engine)
    limit = _step_limit(engine.oracle, instance.starts, assignment.goals)
    t = 0
    while not engine.all_at_goal():
        _timestep(engine, t, events)
        t += 1
        for p, a in zip(paths, engine.states):
            p.append(a.v)
        if monitor:
            monitor(t, engine)
        if t > limit:
            raise RuntimeError("offline planning failed to converge")
    return _trim(instance, paths, events)


# -- schedules ----------------------------------------------------------------------

class ExecutionSchedule:
    """Infinite, reproducible activation sequence.

    ``window``: every agent appears in any ``window`` consecutive activations.
    """

    def __init__(self, kind: str, n_agents: int, seed: Optional[int] = None,
                 agent: Optional[int] = None, factor: int = 1):
        if n_agents <= 0:
            raise InputError("schedule needs at least one agent")
        if kind not in ("round_robin", "random_fair", "delayed"):
            raise InputError(f"unknown schedule kind {kind!r}")
        if kind == "delayed":
            if agent is None or not 0 <= agent < n_agents:
                raise InputError("delayed schedule needs a valid agent id")
            if factor < 1:
                raise InputError("slowdown factor must be >= 1")
        self.kind = kind
        self.n = n_agents
        self.seed = seed
        self.agent = agent
        self.factor = factor
        if kind == "round_robin":
            self.window = n_agents
        elif kind == "random_fair":
            self.window = max(2 * n_agents - 1, 1)
        else:
            self.window = n_agents * factor

    def blocks(self) -> Iterator[list[int]]:
        ids = list(range(self.n))
        rng = random.Random(self.seed)
        for k in itertools.count():
            if self.kind == "round_robin":
                yield ids
            elif self.kind == "random_fair":
                block = ids[:]
                rng.shuffle(block)
                yield block
            else:
                yield [i for i in ids if i != self.agent or k % self.factor == 0]

    def __iter__(self) -> Iterator[int]:
        for block in self.blocks():
            yield from block

    def __repr__(self):
        extra = f", agent={self.agent}, factor={self.factor}" if self.kind == "delayed" else ""
        return f"ExecutionSchedule({self.kind!r}, n={self.n}, seed={self.seed}{extra})"


def make_schedule(kind: str, n_agents: int, seed: Optional[int] = None,
                  agent: Optional[int] = None, factor: int = 1) -> ExecutionSchedule:
    """``kind``: ``round_robin``, ``random_fair`` or ``delayed`` (also ``delayed:AGENT:FACTOR``)."""
    if kind.startswith("delayed:"):
        try:
            _, a, f = kind.split(":")
            agent, factor = int(a), int(f)
        except ValueError:
            raise InputError(f"bad schedule spec {kind!r}, expected delayed:AGENT:FACTOR") from None
        kind = "delayed"
    return ExecutionSchedule(kind, n_agents, seed, agent, factor)


# -- online -------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceEntry:
    activation: int
    agent: int
    moved: bool
    src: int
    dst: int
    event: str
    partners: tuple[int, ...] = ()


@dataclass
class ExecutionTrace:
    entries: list[TraceEntry] = field(default_factory=list)
    terminal: bool = False
    n_agents: int = 0

    @property
    def activations(self) -> int:
        return len({e.activation for e in self.entries})

    def moves_per_agent(self) -> list[int]:
        out = [0] * self.n_agents
        for e in self.entries:
            if e.moved:
                out[e.agent] += 1
        return out

    @property
    def sum_of_moves(self) -> int:
        return sum(self.moves_per_agent())

    @property
    def maximum_moves(self) -> int:
        return max(self.moves_per_agent(), default=0)

    def to_csv(self) -> str:
        lines = ["activation,agent,from,to,event,partners"]
        for e in self.entries:
            lines.append(f"{e.activation},{e.agent},{e.src},{e.dst},{e.event},"
                         + ";".join(str(p) for p in e.partners))
        return "\n".join(lines) + "\n"


def solve_online(instance: Instance, assignment: Assignment, schedule: Iterable[int],
                 activation_budget: int, oracle: Optional[DistanceOracle] = None,
                 observer=None) -> ExecutionTrace:
    """Run activations from ``schedule`` until every target is occupied.

    Raises :class:`BudgetExhausted` (carrying the partial trace) when the
    budget runs out first. ``observer(k, engine, effects)`` sees every activation.
    """
    engine = Engine(instance, assignment, oracle)
    trace = ExecutionTrace(n_agents=instance.n_agents)
    targets = set(instance.targets)
    covered = sum(1 for a in engine.states if a.v in targets)
    if covered == len(targets):
        trace.terminal = True
        return trace
    k = 0
    for agent in schedule:
        if k >= activation_budget:
            break
        effects = engine.step_agent(engine.states[agent])
        for e in effects:
            trace.entries.append(TraceEntry(k, agent, e.moved, e.src, e.dst, e.kind, e.partners))
            if e.moved:
                covered += (e.dst in targets) - (e.src in targets)
        if observer:
            observer(k, engine, effects)
        k += 1
        if covered == len(targets):
            trace.terminal = True
            return trace
    raise BudgetExhausted(f"not terminated after {k} activations", trace)


def solve(instance: Instance, assigner: str = "alg2", **kw) -> tuple[Plan, Assignment]:
    """Assignment followed by offline planning, sharing one distance oracle."""
    from anonmapf.assignment import ASSIGNERS

    oracle = DistanceOracle(instance.graph)
    a = ASSIGNERS[assigner](instance, oracle=oracle)
    return solve_offline(instance, a, oracle=oracle, **kw), a
