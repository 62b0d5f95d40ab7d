"""Compare the compiled and numpy simplex kernels.

Usage::

    python benchmarks/bench_kernel.py [--repeat N] [--size M]

Times three workloads under each kernel and checks that both reach the same
objective: a dense random LP, a batch of small random MILPs and the baseline
schedules of the bundled Case-I communities.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from lecflex.lec import solve_baseline
from lecflex.milp import Model, SolveOptions, quicksum, solve, solve_lp
from lecflex.milp.simplex import use_kernel
from lecflex.scenarios import load_bundled


def dense_lp(size: int, seed: int = 0) -> Model:
    rng = np.random.default_rng(seed)
    m = Model("dense")
    xs = [m.add_variable(0.0, 10.0) for _ in range(size)]
    a = rng.uniform(0.0, 1.0, (size, size))
    for i in range(size):
        m.add_constraint(quicksum(float(a[i, j]) * xs[j] for j in range(size)), "<=", float(a[i].sum() * 3.0))
    m.set_objective(quicksum(-float(c) * x for c, x in zip(rng.uniform(0.5, 1.5, size), xs)))
    return m


def small_milps(count: int, seed: int = 1) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        m = Model(f"milp{k}")
        xs = [m.add_binary() for _ in range(6)] + [m.add_variable(0.0, 5.0) for _ in range(8)]
        for _ in range(6):
            a = rng.normal(0.0, 1.0, len(xs))
            m.add_constraint(quicksum(float(v) * x for v, x in zip(a, xs)), "<=", float(rng.uniform(1.0, 4.0)))
        m.set_objective(quicksum(float(v) * x for v, x in zip(rng.normal(0.0, 1.0, len(xs)), xs)))
        out.append(m)
    return out


def workloads(size: int):
    dense = dense_lp(size)
    milps = small_milps(40)
    s = load_bundled("case1")

    def run_dense():
        return solve_lp(dense).objective

    def run_milps():
        return sum(solve(m).objective for m in milps)

    def run_lec():
        return sum(solve_baseline(l, s.tariffs, s.horizon, s.dt, SolveOptions()).objective for l in s.lecs)

    return {"dense LP": run_dense, "40 small MILPs": run_milps, "Case-I baselines": run_lec}


def timed(fn, repeat: int):
    times, value = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        value = fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times), value


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--size", type=int, default=120, help="rows and columns of the dense LP")
    args = p.parse_args(argv)
    try:
        with use_kernel("cython"):
            pass
    except ImportError:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
        return 1
    print(f"{'workload':<18} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for name, fn in workloads(args.size).items():
        with use_kernel("python"):
            tp, vp = timed(fn, args.repeat)
        with use_kernel("cython"):
            tc, vc = timed(fn, args.repeat)
        if abs(vp - vc) > 1e-6 * max(1.0, abs(vp)):
            print(f"{name}: objectives differ ({vp!r} vs {vc!r})")
            return 1
        print(f"{name:<18} {tp:>10.4f} {tc:>10.4f} {tp / tc:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
