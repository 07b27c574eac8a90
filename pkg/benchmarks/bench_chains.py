"""Compare the compiled and numpy Metropolis kernels.

Usage: ``python benchmarks/bench_chains.py [--steps N] [--chains C]``.
Prints wall time per backend for a single long chain and for a batch of
hitting-time chains, and checks that both backends return identical output.
"""

import argparse
import math
import time

import numpy as np

from fpld.mcmc import GibbsSystem, SubsetSphere, backend, regions_at
from fpld.mcmc.lab import hitting_times, run_chain


def _time(fn):
    t0 = time.perf_counter()
    out = fn()
    return time.perf_counter() - t0, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--chains", type=int, default=2000)
    ap.add_argument("--budget", type=int, default=10_000)
    args = ap.parse_args()

    space = SubsetSphere(14, 3)
    system = GibbsSystem.draw(space, 0, 1.5, 1.5, seed=1)
    radius = math.sqrt(2 / 3)
    reg = regions_at(system, 1 / 3, 1.0)
    starts = np.zeros(args.chains, dtype=np.int64) + int(np.nonzero(reg.A)[0][0])
    names = ["python"] + (["compiled"] if backend.compiled_available() else [])
    results = {}
    for name in names:
        t_single, trace = _time(lambda: run_chain(system, radius, args.steps, 0, 7, name))
        t_batch, tau = _time(
            lambda: hitting_times(system, radius, reg.B, starts, args.budget, 7, name)
        )
        results[name] = (trace.states, tau)
        print(f"{name:>9}: single chain {args.steps} steps {t_single:8.3f} s | "
              f"{args.chains} chains x {args.budget} steps {t_batch:8.3f} s")
    if len(results) == 2:
        same = all(np.array_equal(a, b) for a, b in zip(results["python"], results["compiled"]))
        print("identical output:", same)
    else:
        print("compiled backend unavailable")


if __name__ == "__main__":
    main()
