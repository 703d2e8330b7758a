"""Compare the numba and numpy neighbour kernels, and full runs under each backend.

    python benchmarks/bench_kernels.py [--repeat 20] [--no-runs]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from containsim import kernels


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_kernels(repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<8}{'n':>7}{'numba ms':>11}{'numpy ms':>11}{'speedup':>9}")
    for n in (500, 1000, 2500, 10000):
        x, y = rng.uniform(0, 2000, n), rng.uniform(0, 2000, n)
        src = rng.choice(n, 60, replace=False)
        cases = {
            "pairs": (lambda: kernels.pairs_within_numba(x, y, 3.0),
                      lambda: kernels.pairs_within_numpy(x, y, 3.0)),
            "cross": (lambda: kernels.cross_within_numba(x[src], y[src], x, y, 3.0),
                      lambda: kernels.cross_within_numpy(x[src], y[src], x, y, 3.0)),
        }
        for name, (fast, slow) in cases.items():
            a = [np.asarray(v) for v in fast()]
            b = [np.asarray(v) for v in slow()]
            assert all(np.array_equal(u, v) for u, v in zip(a, b)), name
            tn = best_of(fast, repeat)
            tp = best_of(slow, repeat)
            print(f"{name:<8}{n:>7}{tn * 1e3:>11.3f}{tp * 1e3:>11.3f}{tp / tn:>9.1f}")


RUN = ("import time; from containsim import BACKEND, run_scenario, preset; "
       "cfg = preset('paper-text', population={pop}, rng_seed=1); run_scenario(cfg.replace(horizon=2.0)); "
       "t0 = time.perf_counter(); _, m = run_scenario(cfg); "
       "print(BACKEND, round(time.perf_counter() - t0, 3), m.final()['infected_total'])")


def bench_runs():
    print(f"\n{'backend':<8}{'pop':>6}{'seconds':>10}{'infected':>10}")
    for pop in (500, 2500):
        for backend in ("numba", "numpy"):
            env = dict(os.environ, CONTAINSIM_BACKEND=backend)
            out = subprocess.run([sys.executable, "-c", RUN.format(pop=pop)], env=env,
                                 capture_output=True, text=True, check=True).stdout.split()
            print(f"{out[0]:<8}{pop:>6}{float(out[1]):>10.2f}{out[2]:>10}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--no-runs", action="store_true")
    args = ap.parse_args()
    bench_kernels(args.repeat)
    if not args.no_runs:
        bench_runs()


if __name__ == "__main__":
    main()
