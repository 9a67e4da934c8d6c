"""Compare the compiled and pure-Python scheduling kernels.

Times the two hot kernels (route scheduling and best-insertion scan) on
random CVRPTW-100 routes, plus a full 1000-iteration LNS run per backend.

Usage: python3 benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np

from neulns.core import _pykernels
from neulns.instance_io import GeneratorConfig, generate

try:
    from neulns.core import _ckernels
except ImportError:
    print("compiled kernels are not built; run pip install -e . first")
    sys.exit(1)

REPEATS = 2000


def bench_kernels():
    inst = generate(GeneratorConfig(n_customers=100, variant="cvrptw", seed=0))
    rng = np.random.default_rng(0)
    routes = []
    customers = list(rng.permutation(100) + 1)
    while customers:
        k = int(rng.integers(3, 11))
        routes.append(np.array(customers[:k], dtype=np.int64))
        customers = customers[k:]

    for name, mod in (("python", _pykernels), ("c", _ckernels)):
        t = time.perf_counter()
        for _ in range(REPEATS):
            for seq in routes:
                mod.route_profile(
                    seq, inst.dist, inst.tw_start, inst.tw_end, inst.service, inst.demand
                )
        profile_s = time.perf_counter() - t

        t = time.perf_counter()
        for _ in range(REPEATS):
            for seq in routes[1:]:
                mod.best_position(
                    seq, int(routes[0][0]), inst.dist, inst.tw_start, inst.tw_end,
                    inst.service, inst.demand, inst.capacity,
                )
        insert_s = time.perf_counter() - t
        yield name, profile_s, insert_s


def bench_search(backend):
    """Full LNS run in a subprocess so the backend env var takes effect."""
    code = (
        "import time, numpy as np\n"
        "from neulns.instance_io import GeneratorConfig, generate\n"
        "from neulns.engine import run_search, SearchConfig\n"
        "from neulns.heuristics import RandomOperator\n"
        "inst = generate(GeneratorConfig(n_customers=100, variant='cvrp', seed=3))\n"
        "t = time.perf_counter()\n"
        "_, cost, _ = run_search(inst, RandomOperator(10), SearchConfig(iterations=1000, seed=0))\n"
        "print(time.perf_counter() - t, cost.total_cost)\n"
    )
    env = dict(os.environ, NEULNS_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    seconds, cost = out.stdout.split()
    return float(seconds), float(cost)


def main():
    print(f"{'backend':<8} {'route_profile':>14} {'best_position':>14}")
    timings = {}
    for name, profile_s, insert_s in bench_kernels():
        timings[name] = (profile_s, insert_s)
        print(f"{name:<8} {profile_s:>13.3f}s {insert_s:>13.3f}s")
    p, c = timings["python"], timings["c"]
    print(f"speedup  {p[0] / c[0]:>13.1f}x {p[1] / c[1]:>13.1f}x")

    print()
    print(f"{'backend':<8} {'1000-iter LNS':>14} {'best cost':>12}")
    costs = {}
    for backend in ("python", "c"):
        seconds, cost = bench_search(backend)
        costs[backend] = cost
        print(f"{backend:<8} {seconds:>13.3f}s {cost:>12.2f}")
    match = "identical" if costs["python"] == costs["c"] else "DIFFERENT"
    print(f"search results across backends: {match}")


if __name__ == "__main__":
    main()
