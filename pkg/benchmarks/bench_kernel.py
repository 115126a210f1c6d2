"""Time the compiled inner sweep against the numpy fallback.

    python benchmarks/bench_kernel.py [--nx 1201] [--repeat 5] [--threads N]

Also reports the largest difference between the two backends' outputs and a
full solve time per backend on a reduced grid.
"""
import argparse
import time

import numpy as np

from bomber import kernel
from bomber.grid import Grid
from bomber.model import ModelParams
from bomber.solver import GOLDEN_ITERS, TIE_TOL, solve


def sweep_time(fn, Q, dx, v, threads, repeat):
    R = np.empty_like(Q)
    K = np.empty_like(Q)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(Q, dx, v, 1.0, True, GOLDEN_ITERS, TIE_TOL, R, K, 0, -1, threads)
        best = min(best, time.perf_counter() - t0)
    return best, R, K


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nx", type=int, default=1201)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    grid = Grid(12.0, args.nx, 5.0, 2001)
    v = 0.75
    # a realistic slice: the complement of survival after a short solve
    field = solve(ModelParams(v), Grid(12.0, args.nx, 0.5, 21), threads=args.threads)
    Q = np.ascontiguousarray(field.P_comp[:, -1])

    results = {}
    for name, fn in sorted(kernel.SWEEPS.items()):
        secs, R, K = sweep_time(fn, Q, grid.dx, v, args.threads, args.repeat)
        results[name] = (secs, R, K)
        print(f"{name:>9}: {1e3 * secs:9.2f} ms per sweep (nx={args.nx})")
    if len(results) == 2:
        (tc, Rc, Kc), (tp, Rp, Kp) = results["compiled"], results["python"]
        print(f"  speedup {tp / tc:.1f}x; max |dR| {np.abs(Rc - Rp).max():.2e}, max |dK| {np.abs(Kc - Kp).max():.2e}")

    small = Grid(6.0, 301, 1.0, 101)
    for name in sorted(kernel.SWEEPS):
        t0 = time.perf_counter()
        solve(ModelParams(v), small, threads=args.threads, backend=name)
        print(f"{name:>9}: full solve on {small.nx}x{small.nt} in {time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
