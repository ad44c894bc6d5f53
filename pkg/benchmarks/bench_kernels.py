"""Compare the compiled and pure-Python kernels on the same workloads.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Each workload
goes through the public API with the backend swapped in place, so both paths
do identical work. Results are checked to agree before timing is reported.
"""

import argparse
import time

import numpy as np

from liequad import _backend, _pykernels
from liequad.dynamics import QuadraticState
from liequad.integrate import SolverSettings, integrate_quadratic, reconstruct_group

try:
    from liequad import _kernels
except ImportError:
    _kernels = None

EX1 = QuadraticState(0.0, 4 - 1.75j, -0.1 + 2.5j, -5 - 5j)


def workloads():
    tight = SolverSettings(atol=1e-10, rtol=1e-10)
    vel = integrate_quadratic(EX1, 1.0, (0.0, 20.0), tight)
    return {
        "rk45 complex [0,20]": lambda: integrate_quadratic(EX1, 1.0, (0.0, 20.0), tight).states,
        "rk4 complex [0,5]": lambda: integrate_quadratic(
            EX1, 1.0, (0.0, 5.0), SolverSettings(method="rk4_fixed", step=1e-3)).states,
        "magnus group [0,20]": lambda: reconstruct_group(vel).points,
    }


def timed(fn, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def run(module, fn, repeat):
    saved = _backend.kernels
    _backend.kernels = module
    try:
        return timed(fn, repeat)
    finally:
        _backend.kernels = saved


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; timing the pure-Python kernels only")
    print(f"{'workload':<22}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}")
    for name, fn in workloads().items():
        t_py, r_py = run(_pykernels, fn, args.repeat)
        if _kernels is None:
            print(f"{name:<22}{t_py:>12.4f}{'-':>14}{'-':>10}")
            continue
        t_c, r_c = run(_kernels, fn, args.repeat)
        if not np.allclose(r_py, r_c, rtol=1e-9, atol=1e-9):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<22}{t_py:>12.4f}{t_c:>14.4f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
