"""Benchmark the two simulation backends on the hot path kernel.

Runs the same ensemble on the numba backend (scalar per-path loops,
parallel over paths) and the pure-numpy backend (vectorized across
paths), checks the outputs are bit-identical, and reports wall times.

Usage:
    python benchmarks/bench_backends.py [--paths 50000] [--gens 25]
"""

import argparse
import time

import numpy as np

from bprelab import backend
from bprelab.env_model import make_environment, make_offspring_law
from bprelab.montecarlo import SimConfig, simulate_ensemble


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--paths", type=int, default=50_000)
    parser.add_argument("--gens", type=int, default=25)
    parser.add_argument("--threshold", type=int, default=10 ** 6)
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args()

    env = make_environment(
        [
            (0.5, make_offspring_law([0.0, 0.5, 0.5])),
            (0.5, make_offspring_law([0.0, 0.2, 0.8])),
        ]
    )
    cfg = SimConfig(
        seed=args.seed,
        n_paths=args.paths,
        n_gens=args.gens,
        exact_pop_threshold=args.threshold,
    )
    cps = [args.gens // 2, args.gens]

    names = backend.available_backends()
    if "numba" in names:
        # compile outside the timed region
        simulate_ensemble(
            env,
            SimConfig(seed=1, n_paths=16, n_gens=2, exact_pop_threshold=1000),
            backend_name="numba",
        )

    results = {}
    for name in names:
        t0 = time.perf_counter()
        results[name] = simulate_ensemble(env, cfg, checkpoints=cps, backend_name=name)
        dt = time.perf_counter() - t0
        rate = args.paths * args.gens / dt / 1e6
        print(f"{name:>6}: {dt:8.3f} s   ({rate:6.2f} M path-gens/s)")
        results[name + "_t"] = dt

    if "numba" in names and "numpy" in names:
        a, b = results["numba"], results["numpy"]
        same = (
            np.array_equal(a.z, b.z)
            and np.array_equal(a.w, b.w)
            and np.array_equal(a.flags, b.flags)
        )
        print(f"outputs bit-identical: {same}")
        print(f"speedup numba/numpy: {results['numpy_t'] / results['numba_t']:.1f}x")
        if not same:
            raise SystemExit("backend outputs diverged")


if __name__ == "__main__":
    main()
