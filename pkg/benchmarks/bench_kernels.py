"""Compare the numba and numpy kernel backends on the Monte Carlo hot path.

Each backend runs in its own interpreter because the choice is fixed at
import time.  Usage::

    python3 benchmarks/bench_kernels.py [--n 1000] [--trials 20000] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
import wstats
from wstats import SimConfig, run_simulation, _kernels

n, trials, repeat = map(int, sys.argv[1:4])
cfg = SimConfig(n=n, trials=trials, master_seed=1, estimators=("w", "mle"))
t0 = time.perf_counter()
run_simulation(SimConfig(n=n, trials=2, master_seed=1))  # warm-up / JIT
warm = time.perf_counter() - t0
sim = []
for _ in range(repeat):
    t0 = time.perf_counter()
    rep = run_simulation(cfg)
    sim.append(time.perf_counter() - t0)

rng = np.random.default_rng(0)
block = rng.normal(size=(128, n))
k = np.linspace(-1, 1, n) / n
kern = []
for _ in range(repeat):
    t0 = time.perf_counter()
    for _ in range(50):
        _kernels.row_statistics(block, k)
    kern.append((time.perf_counter() - t0) / 50)
print(json.dumps({
    "backend": wstats.BACKEND,
    "warmup_s": warm,
    "simulation_s": min(sim),
    "row_statistics_block_ms": 1e3 * min(kern),
    "sigma_n_variance_scaled": rep.scaled("w", "sigma_n_variance_scaled"),
}))
"""


def run(disable, args):
    env = dict(os.environ)
    if disable:
        env["WSTATS_DISABLE_NUMBA"] = "1"
    else:
        env.pop("WSTATS_DISABLE_NUMBA", None)
    proc = subprocess.run(
        [sys.executable, "-c", CHILD, str(args.n), str(args.trials), str(args.repeat)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(proc.stdout)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    results = [run(False, args), run(True, args)]
    print(f"n={args.n} trials={args.trials} (best of {args.repeat})")
    print(f"{'backend':8} {'warm-up s':>10} {'simulate s':>11} {'block ms':>9} {'nV/s^2':>9}")
    for r in results:
        print(f"{r['backend']:8} {r['warmup_s']:10.3f} {r['simulation_s']:11.3f} "
              f"{r['row_statistics_block_ms']:9.3f} {r['sigma_n_variance_scaled']:9.5f}")
    if results[0]["backend"] == "numba":
        print(f"speed-up on the simulation: {results[1]['simulation_s'] / results[0]['simulation_s']:.2f}x")


if __name__ == "__main__":
    main()
