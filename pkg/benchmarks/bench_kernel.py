"""Time the compiled cycle kernel against the pure-Python one.

    python benchmarks/bench_kernel.py [--repeat 3]

Both kernels run the same configurations; their cycle logs are compared
before any timing is reported.
"""

import argparse
import sys
import time
from dataclasses import replace

import numpy as np

from mumimo_sim import kernel
from mumimo_sim.engine import SimConfig, simulate
from mumimo_sim.harness import configure_point, make_figure_config

CASES = {
    "backlogged 4 users, agg 40": lambda h: SimConfig(horizon=h),
    "bimodal w=0.5, agg 10": lambda h: replace(
        configure_point(make_figure_config("fig5"), 0.5, 10, 0), horizon=h, warmup=0.0),
    "on/off 12 users, ratio 27, agg 40": lambda h: replace(
        configure_point(make_figure_config("fig7"), 27, 40, 0), horizon=h, warmup=0.0),
}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--horizon", type=float, default=2.0, help="simulated seconds per run")
    args = ap.parse_args(argv)

    if kernel.compiled_run_cycles is None:
        print("compiled kernel not built; only the Python kernel is available", file=sys.stderr)
        return 1

    print(f"{'case':<36}{'cycles':>8}{'python s':>11}{'cython s':>11}{'speedup':>9}")
    for name, make in CASES.items():
        cfg = make(args.horizon)
        t_py, (log_py, _) = best_of(lambda: simulate(cfg, kernel.python_run_cycles), args.repeat)
        t_c, (log_c, _) = best_of(lambda: simulate(cfg, kernel.compiled_run_cycles), args.repeat)
        if not (np.array_equal(log_py.tx_end, log_c.tx_end)
                and np.array_equal(log_py.payload, log_c.payload)):
            print(f"{name}: kernels disagree", file=sys.stderr)
            return 1
        print(f"{name:<36}{len(log_c):>8}{t_py:>11.3f}{t_c:>11.3f}{t_py / t_c:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
