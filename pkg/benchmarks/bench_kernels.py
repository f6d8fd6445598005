"""Benchmark the compiled stepping kernel against its pure-numpy twin.

Runs the same blow-up problem with both backends, checks they agree, and
prints wall times.  The numba kernel is warmed once before timing so JIT
compilation is not counted.

    python3 benchmarks/bench_kernels.py [--dr 0.0025] [--eps 0.05]
"""

import argparse
import time

import numpy as np

from wavelifespan import (
    ModelParams,
    RadialGrid,
    bound_from_run,
    estimate_C1,
    make_bump_data,
    run_until_blowup,
)
from wavelifespan._kernels import USING_NUMBA


def run_backend(backend, params, data, grid, t_final):
    t0 = time.perf_counter()
    report, trace = run_until_blowup(params, data, grid, t_final, backend=backend)
    return report, trace, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dr", type=float, default=0.005)
    ap.add_argument("--eps", type=float, default=0.1)
    args = ap.parse_args()

    params = ModelParams(n=1, p=2.0, mu=1.0, beta=2.0, R=1.0, eps=args.eps)
    data = make_bump_data(1.0, 0.0, 1.0)
    C1 = estimate_C1(params.n, params.R, t_max=40.0)
    t_final = 1.25 * bound_from_run(params, data, C1).T_blowup
    grid = RadialGrid.for_horizon(params.n, args.dr, t_final, params.R)
    print(f"problem: n=1 p=2 mu=1 beta=2 eps={args.eps}, dr={args.dr}, "
          f"grid nodes={grid.nodes}, t_final={t_final:.1f}")

    if not USING_NUMBA:
        print("numba backend unavailable (WAVELIFESPAN_NUMBA=0?); benchmarking numpy only")
    else:
        # warm the JIT before timing
        warm_grid = RadialGrid.for_horizon(1, 0.02, 2.0, 1.0)
        run_until_blowup(params, data, warm_grid, 2.0, n_samples=10, backend="numba")

    results = {}
    for backend in (("numba", "numpy") if USING_NUMBA else ("numpy",)):
        report, trace, wall = run_backend(backend, params, data, grid, t_final)
        results[backend] = (report, trace, wall)
        print(f"{backend:>6}: T={report.blow_up_time:.6f}  steps={report.steps}  "
              f"wall={wall:.2f}s")

    if len(results) == 2:
        rn, tn, wn = results["numba"]
        rp, tp, wp = results["numpy"]
        dT = abs(rn.blow_up_time - rp.blow_up_time) / rn.blow_up_time
        dF = float(np.max(np.abs(tn.F1 - tp.F1))) / float(np.max(np.abs(tn.F1)))
        print(f"speedup: {wp / wn:.1f}x   |dT|/T={dT:.3e}   max rel dF1={dF:.3e}")
        assert dT < 1e-6 and dF < 1e-9, "backends disagree beyond libm-level noise"


if __name__ == "__main__":
    main()
