"""Unlabeled multi-agent path finding: target assignment, TSWAP planning and a
flow-based makespan-optimal baseline."""

from anonmapf import _backend
from anonmapf.assignment import (ASSIGNERS, Assignment, assign_bottleneck, assign_greedy_refined,
                                 assign_naive_greedy, assign_optimal_linear, park_surplus_agents)
from anonmapf.errors import (BudgetExhausted, CapacityError, ContractError, InfeasibleError,
                             InputError, MapParseError, SolverTimeout)
from anonmapf.graph import DistanceOracle, Graph, grid_graph
from anonmapf.instance import (Instance, Metrics, Plan, Violation, compute_metrics,
                               generate_random_instance, parse_movingai_map, random_grid,
                               validate_plan)
from anonmapf.optimal_baseline import solve_optimal
from anonmapf.tswap import make_schedule, solve, solve_offline, solve_online

__version__ = "0.1.0"
backend = _backend.name
