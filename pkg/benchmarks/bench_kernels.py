"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--size 64] [--agents 500] [--repeat 3]

Each workload runs end to end through the public API with the backend
switched in-process, so the numbers include all Python-side overhead.
"""
import argparse
import statistics
import time

from anonmapf import _backend
from anonmapf.assignment import ASSIGNERS
from anonmapf.graph import DistanceOracle
from anonmapf.instance import generate_random_instance, random_grid
from anonmapf.optimal_baseline import solve_optimal
from anonmapf.tswap import solve_offline


def workloads(size, agents):
    g = random_grid(size, size, 0.2, seed=0)
    inst = generate_random_instance(g, agents, seed=0)
    small = generate_random_instance(g, max(agents // 5, 1), seed=1)
    fixed = ASSIGNERS["alg2"](inst)

    def bfs_all():
        o = DistanceOracle(g)
        for s in inst.starts[:50]:
            o.table(s)

    return {
        "bfs x50 roots": bfs_all,
        "assign alg3": lambda: ASSIGNERS["alg3"](inst),
        "assign alg2dagger": lambda: ASSIGNERS["alg2dagger"](inst),
        "tswap offline": lambda: solve_offline(inst, fixed),
        f"flow optimum ({len(small.starts)} agents)": lambda: solve_optimal(small),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--agents", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = _backend.available()
    if "cython" not in backends:
        print("compiled extension not built; only the fallback is available")
    jobs = workloads(args.size, args.agents)
    results = {}
    for b in backends:
        prev = _backend.use(b)
        try:
            results[b] = {name: best_of(fn, args.repeat) for name, fn in jobs.items()}
        finally:
            _backend.use(prev)

    width = max(map(len, jobs)) + 2
    print(f"{args.size}x{args.size} grid, {args.agents} agents, best of {args.repeat}")
    print("workload".ljust(width) + "".join(f"{b:>12}" for b in backends) + "     speedup")
    for name in jobs:
        row = name.ljust(width) + "".join(f"{results[b][name][0] * 1000:10.1f}ms" for b in backends)
        if len(backends) == 2:
            row += f"{results['python'][name][0] / results['cython'][name][0]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
