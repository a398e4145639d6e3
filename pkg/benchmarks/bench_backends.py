"""Compare the compiled tape kernel against the pure-Python fallback.

Two views:
  micro     raw tape evaluations per second, both backends in-process
  pipeline  wall time of a full certification run per backend, in a
            subprocess so the import-time backend choice applies

Usage: python benchmarks/bench_backends.py [--micro-iters N] [--runs N]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from hamlin._kernels import BACKEND, available_backends
from hamlin.model import builtin_lotka_volterra


def bench_micro(iters: int) -> None:
    system = builtin_lotka_volterra()
    expr = system.nu  # rational function, a representative hot tape
    x = np.ascontiguousarray([1.0, 1.0, 2.0])
    pvec = np.empty(0, dtype=np.float64)
    stack = np.empty(max(expr._stack_need, 1), dtype=np.float64)
    dstack = np.empty_like(stack)
    out = np.zeros(2, dtype=np.float64)
    err = np.zeros(2, dtype=np.int64)

    print(f"micro benchmark: {iters} value + {iters} dual evaluations")
    for name, backend in sorted(available_backends().items()):
        t0 = time.perf_counter()
        for _ in range(iters):
            backend.eval_value(expr._code, expr._arg, expr._consts, x,
                               pvec, stack, err)
        t_value = time.perf_counter() - t0
        t0 = time.perf_counter()
        for _ in range(iters):
            backend.eval_dual(expr._code, expr._arg, expr._consts, x,
                              pvec, 0, stack, dstack, out, err)
        t_dual = time.perf_counter() - t0
        print(f"  {name:7s} value {iters / t_value:12.0f}/s   "
              f"dual {iters / t_dual:12.0f}/s")


def bench_pipeline(runs: int) -> None:
    cmd = [sys.executable, "-m", "hamlin.cli", "verify",
           "--builtin", "lotka-volterra", "--samples", "3000"]
    print(f"pipeline benchmark: best of {runs} verification runs "
          "(3000 samples)")
    for name, env_flag in (("cython", "0"), ("python", "1")):
        if name not in available_backends():
            print(f"  {name:7s} (not built)")
            continue
        env = dict(os.environ, HAMLIN_PURE_PYTHON=env_flag)
        best = float("inf")
        for _ in range(runs):
            t0 = time.perf_counter()
            r = subprocess.run(cmd, env=env, capture_output=True, text=True)
            elapsed = time.perf_counter() - t0
            if r.returncode != 0:
                print(r.stdout + r.stderr, file=sys.stderr)
                raise SystemExit(f"benchmark run failed under {name}")
            best = min(best, elapsed)
        print(f"  {name:7s} {best * 1e3:8.1f} ms")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--micro-iters", type=int, default=200000)
    ap.add_argument("--runs", type=int, default=3)
    args = ap.parse_args()
    print(f"active backend in this process: {BACKEND}")
    bench_micro(args.micro_iters)
    bench_pipeline(args.runs)


if __name__ == "__main__":
    main()
