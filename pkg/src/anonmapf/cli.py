"""Command-line harness: ``solve``, ``bench``, ``online``, ``validate``, ``gen``.

Exit codes: 0 ok, 1 invalid plan, 2 bad arguments or unreadable input,
3 timeout or exhausted activation budget.
"""
from __future__ import annotations

import argparse
import csv
import functools
import io
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

from anonmapf import _backend
from anonmapf.assignment import ASSIGNERS, format_assignment
from anonmapf.errors import BudgetExhausted, InputError, SolverTimeout
from anonmapf.graph import DistanceOracle
from anonmapf.instance import (Instance, compute_metrics, format_instance, format_plan,
                               generate_random_instance, load_map, parse_cells, parse_plan,
                               random_grid_map, read_instance, validate_plan)
from anonmapf.optimal_baseline import solve_optimal
from anonmapf.tswap import make_schedule, solve_offline, solve_online

log = logging.getLogger("anonmapf")

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_TIMEOUT = 0, 1, 2, 3
DEFAULT_TIMEOUT = 300.0
TSWAP_ASSIGNERS = ("alg2", "alg2dagger", "alg2dagger_eager", "alg3", "alg3_eager", "alg5",
                   "naive", "linear")


@dataclass
class ResultRow:
    map: str
    n_agents: int
    seed: Optional[int]
    solver: str
    assignment: str
    makespan: Optional[int] = None
    sum_of_costs: Optional[int] = None
    maximum_moves: Optional[int] = None
    sum_of_moves: Optional[int] = None
    runtime_ms: Optional[float] = None
    lower_bound: Optional[int] = None
    status: str = "ok"

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def cells(self) -> list[str]:
        out = []
        for k, v in asdict(self).items():
            if v is None:
                out.append("")
            elif k == "runtime_ms":
                out.append(f"{v:.3f}")
            else:
                out.append(str(v))
        return out

    @classmethod
    def from_cells(cls, d: dict) -> "ResultRow":
        kw = {}
        for f in fields(cls):
            raw = d[f.name]
            if raw == "" and f.name not in ("map", "solver", "assignment", "status"):
                kw[f.name] = None
            elif f.name == "runtime_ms":
                kw[f.name] = float(raw)
            elif f.name in ("map", "solver", "assignment", "status"):
                kw[f.name] = raw
            else:
                kw[f.name] = int(raw)
        return cls(**kw)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ResultRow.header())
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ResultRow]:
    return [ResultRow.from_cells(d) for d in csv.DictReader(io.StringIO(text))]


# -- solver specs ----------------------------------------------------------------

@dataclass(frozen=True)
class SolverSpec:
    kind: str  # tswap | flow
    assign: str = "alg2"
    lb: Optional[str] = None
    prune: bool = True
    reuse: bool = True

    @property
    def label(self) -> str:
        if self.kind == "tswap":
            return self.assign
        parts = [self.lb or "auto"]
        parts.append("prune" if self.prune else "noprune")
        parts.append("reuse" if self.reuse else "noreuse")
        return "+".join(parts)


def parse_solver(text: str) -> SolverSpec:
    """``tswap:ASSIGN`` or ``flow[:conservative|bottleneck][:noprune][:noreuse]``."""
    parts = text.strip().split(":")
    if parts[0] == "tswap":
        assign = parts[1] if len(parts) > 1 else "alg2"
        if assign not in ASSIGNERS or len(parts) > 2:
            raise InputError(f"bad solver {text!r}")
        return SolverSpec("tswap", assign)
    if parts[0] == "flow":
        lb, prune, reuse = None, True, True
        for p in parts[1:]:
            if p in ("conservative", "bottleneck"):
                lb = p
            elif p == "noprune":
                prune = False
            elif p == "noreuse":
                reuse = False
            else:
                raise InputError(f"bad flow option {p!r} in {text!r}")
        return SolverSpec("flow", "", lb, prune, reuse)
    raise InputError(f"unknown solver {text!r}")


def run_solver(instance: Instance, spec: SolverSpec, timeout: Optional[float]):
    """Solve and time one instance; returns ``(plan, lower_bound, runtime_ms, extra)``."""
    t0 = time.perf_counter()
    if spec.kind == "tswap":
        oracle = DistanceOracle(instance.graph)
        assignment = ASSIGNERS[spec.assign](instance, oracle=oracle)
        plan = solve_offline(instance, assignment, oracle=oracle)
        ms = (time.perf_counter() - t0) * 1000
        if timeout is not None and ms > timeout * 1000:
            raise SolverTimeout(f"finished after the {timeout}s limit")
        return plan, None, ms, assignment
    res = solve_optimal(instance, spec.lb, spec.prune, spec.reuse, timeout)
    ms = (time.perf_counter() - t0) * 1000
    return res.plan, res.lower_bound, ms, res


def result_row(instance: Instance, map_name: str, spec: SolverSpec, timeout) -> ResultRow:
    row = ResultRow(map_name, instance.n_agents, instance.seed, spec.kind, spec.label)
    try:
        plan, lb, ms, _ = run_solver(instance, spec, timeout)
        m = compute_metrics(instance, plan)
    except SolverTimeout:
        row.status = "timeout"
        return row
    except Exception as e:  # isolate per-instance failures
        log.warning("%s n=%d seed=%s %s failed: %s", map_name, instance.n_agents,
                    instance.seed, spec.label, e)
        row.status = "error"
        return row
    row.makespan, row.sum_of_costs = m.makespan, m.sum_of_costs
    row.maximum_moves, row.sum_of_moves = m.maximum_moves, m.sum_of_moves
    row.runtime_ms, row.lower_bound = ms, lb
    return row


# -- argument handling -------------------------------------------------------------

def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Keys use option names."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _add_instance_args(p: argparse.ArgumentParser, random_ok: bool = True):
    g = p.add_argument_group("instance")
    g.add_argument("--instance", help="instance file (see README for the format)")
    g.add_argument("--map", help="MovingAI .map file")
    g.add_argument("--starts", nargs="+", metavar="X,Y", help="start cells (col,row)")
    g.add_argument("--targets", nargs="+", metavar="X,Y", help="target cells (col,row)")
    if random_ok:
        g.add_argument("--agents", type=int, help="random instance: number of agents")
        g.add_argument("--n-targets", type=int, help="random instance: number of targets")
    g.add_argument("--seed", type=int, default=0, help="instance seed (default 0)")


def load_instance(args) -> tuple[Instance, str]:
    if args.instance:
        inst = read_instance(args.instance)
        return inst, Path(args.instance).stem
    if not args.map:
        raise InputError("give --instance or --map")
    graph = load_map(args.map)
    name = Path(args.map).stem
    if args.starts or args.targets:
        if not (args.starts and args.targets):
            raise InputError("--starts and --targets go together")
        return Instance(graph, tuple(parse_cells(graph, args.starts)),
                        tuple(parse_cells(graph, args.targets)), name=name), name
    n = getattr(args, "agents", None)
    if n is None:
        raise InputError("give --starts/--targets or --agents")
    return generate_random_instance(graph, int(n), getattr(args, "n_targets", None),
                                    seed=args.seed, name=name), name


def _ints(text) -> list[int]:
    if isinstance(text, list):
        return [int(x) for x in text]
    return [int(x) for x in str(text).replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anonmapf", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("--config", help="key=value file; flags override it")
    _add_instance_args(p)
    p.add_argument("--solver", default="tswap", help="tswap | flow[:LB][:noprune][:noreuse]")
    p.add_argument("--assign", default="alg2", choices=TSWAP_ASSIGNERS)
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="seconds")
    p.add_argument("--plan-out", help="write the plan here")
    p.add_argument("--assignment-out", help="write the assignment here (tswap only)")
    p.add_argument("--diagnostics-out", help="per-horizon flow sizes as CSV (flow only)")

    p = sub.add_parser("bench", help="benchmark sweep, one CSV row per (instance, solver)")
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--map", nargs="+", help="MovingAI map files")
    p.add_argument("--agents", nargs="+", help="agent counts")
    p.add_argument("--n-targets", type=int, help="targets per instance (default: = agents)")
    p.add_argument("--seeds", type=int, default=5, help="seeds 0..N-1 per setting")
    p.add_argument("--solvers", nargs="+", default=["tswap:alg2", "flow"])
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", help="CSV output path (default stdout)")

    p = sub.add_parser("online", help="simulate asynchronous execution under a schedule")
    p.add_argument("--config", help="key=value file; flags override it")
    _add_instance_args(p)
    p.add_argument("--assign", default="alg2", choices=TSWAP_ASSIGNERS)
    p.add_argument("--schedule", default="round_robin",
                   help="round_robin | random_fair | delayed:AGENT:FACTOR")
    p.add_argument("--budget", type=int, default=1_000_000, help="activation budget")
    p.add_argument("--schedule-seed", type=int, help="defaults to --seed")
    p.add_argument("--trace-out", help="write the trace CSV here (default stdout)")

    p = sub.add_parser("validate", help="check a plan file against an instance")
    p.add_argument("--config", help="key=value file; flags override it")
    _add_instance_args(p)
    p.add_argument("--plan", required=True)

    p = sub.add_parser("gen", help="generate a map and/or an instance file")
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--map", help="existing map to place agents on")
    p.add_argument("--random-map", metavar="WxH", help="generate a random grid map")
    p.add_argument("--obstacles", type=float, default=0.2)
    p.add_argument("--map-out", help="where to write a generated map")
    p.add_argument("--agents", type=int)
    p.add_argument("--n-targets", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="instance file path (default stdout)")
    return ap


def parse_args(argv):
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "config", None):
        conf = read_config(args.config)
        sub = ap._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        for k in conf:
            if k not in known:
                raise InputError(f"unknown config key {k!r}")
        defaults = {}
        for k, v in conf.items():
            action = known[k]
            if action.nargs in ("+", "*"):
                defaults[k] = v.split()
            elif action.type is not None:
                defaults[k] = action.type(v)
            else:
                defaults[k] = v
        sub.set_defaults(**defaults)
        args = ap.parse_args(argv)
    return args


# -- commands ------------------------------------------------------------------------

def cmd_solve(args) -> int:
    inst, name = load_instance(args)
    spec = parse_solver(args.solver)
    if spec.kind == "tswap":
        spec = SolverSpec("tswap", args.assign)
    try:
        plan, lb, ms, extra = run_solver(inst, spec, args.timeout)
    except SolverTimeout as e:
        print(f"timeout: {e} (last horizon {e.last_horizon})", file=sys.stderr)
        row = ResultRow(name, inst.n_agents, inst.seed, spec.kind, spec.label, status="timeout")
        sys.stdout.write(rows_to_csv([row]))
        return EXIT_TIMEOUT
    violations = validate_plan(inst, plan)
    if violations:
        for v in violations:
            print(v, file=sys.stderr)
        return EXIT_INVALID
    m = compute_metrics(inst, plan)
    if args.plan_out:
        Path(args.plan_out).write_text(format_plan(plan, m))
    if args.assignment_out and spec.kind == "tswap":
        Path(args.assignment_out).write_text(format_assignment(inst, extra))
    if args.diagnostics_out and spec.kind == "flow":
        Path(args.diagnostics_out).write_text(extra.diagnostics_csv())
    row = ResultRow(name, inst.n_agents, inst.seed, spec.kind, spec.label, m.makespan,
                    m.sum_of_costs, m.maximum_moves, m.sum_of_moves, ms, lb)
    sys.stdout.write(rows_to_csv([row]))
    return EXIT_OK


@functools.lru_cache(maxsize=8)
def _cached_map(path):
    return load_map(path)


def _bench_task(task):
    path, n, m, seed, solver, timeout = task
    graph = _cached_map(path)
    inst = generate_random_instance(graph, n, m, seed=seed, name=Path(path).stem)
    return result_row(inst, Path(path).stem, parse_solver(solver), timeout)


def cmd_bench(args) -> int:
    if not args.map or not args.agents:
        raise InputError("bench needs --map and --agents (flags or config)")
    maps = args.map if isinstance(args.map, list) else [args.map]
    counts = _ints(args.agents)
    solvers = args.solvers if isinstance(args.solvers, list) else str(args.solvers).split()
    for s in solvers:
        parse_solver(s)
    for path in maps:
        n_nodes = _cached_map(path).n_nodes
        for n in counts:
            if n > n_nodes:
                raise InputError(f"{n} agents exceed the {n_nodes} nodes of {path}")
    tasks = [(path, n, args.n_targets, seed, s, args.timeout)
             for path in maps for n in counts for seed in range(args.seeds) for s in solvers]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_bench_task, tasks))
    else:
        rows = [_bench_task(t) for t in tasks]
    text = rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_online(args) -> int:
    inst, _ = load_instance(args)
    oracle = DistanceOracle(inst.graph)
    assignment = ASSIGNERS[args.assign](inst, oracle=oracle)
    seed = args.schedule_seed if args.schedule_seed is not None else args.seed
    schedule = make_schedule(args.schedule, inst.n_agents, seed=seed)
    psi0 = sum(oracle.dist(s, g) for s, g in zip(inst.starts, assignment.goals))
    code = EXIT_OK
    try:
        trace = solve_online(inst, assignment, schedule, args.budget, oracle=oracle)
    except BudgetExhausted as e:
        trace = e.trace
        code = EXIT_TIMEOUT
        print(f"budget exhausted: {e}", file=sys.stderr)
    if args.trace_out:
        Path(args.trace_out).write_text(trace.to_csv())
    else:
        sys.stdout.write(trace.to_csv())
    print(f"terminal={int(trace.terminal)} activations={trace.activations} "
          f"sum_of_moves={trace.sum_of_moves} maximum_moves={trace.maximum_moves} psi0={psi0}",
          file=sys.stderr if not args.trace_out else sys.stdout)
    return code


def cmd_validate(args) -> int:
    inst, _ = load_instance(args)
    plan = parse_plan(Path(args.plan).read_text())
    violations = validate_plan(inst, plan)
    for v in violations:
        print(v)
    if violations:
        return EXIT_INVALID
    m = compute_metrics(inst, plan)
    print("valid " + " ".join(f"{k}={v}" for k, v in m.as_dict().items()))
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.random_map:
        try:
            w, h = (int(x) for x in args.random_map.lower().split("x"))
        except ValueError:
            raise InputError("--random-map expects WxH") from None
        text = random_grid_map(w, h, args.obstacles, args.seed)
        if not args.map_out:
            raise InputError("--random-map needs --map-out")
        Path(args.map_out).write_text(text)
        map_path = args.map_out
    else:
        map_path = args.map
    if args.agents is None:
        return EXIT_OK
    if not map_path:
        raise InputError("gen needs --map or --random-map")
    graph = load_map(map_path)
    inst = generate_random_instance(graph, args.agents, args.n_targets, seed=args.seed)
    ref = map_path
    if args.out:
        try:
            ref = os.path.relpath(Path(map_path).resolve(), Path(args.out).resolve().parent)
        except ValueError:  # different drive
            ref = str(Path(map_path).resolve())
    text = format_instance(inst, map_ref=ref)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "online": cmd_online,
            "validate": cmd_validate, "gen": cmd_gen}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:  # argparse usage errors
        return int(e.code) if e.code is not None else EXIT_OK
    except (InputError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    log.debug("kernel backend: %s", _backend.name)
    try:
        return COMMANDS[args.command](args)
    except (InputError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
