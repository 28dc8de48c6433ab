"""Compare the compiled and numpy kernels, alone and inside a full run.

Usage: python3 benchmarks/bench_kernels.py [--cells 4096] [--repeat 50]
"""
import argparse
import time

import numpy as np

from relaxlab import kernels
from relaxlab.diagnostics import well_prepared_ic
from relaxlab.models import build_elasticity
from relaxlab.presets import initial_profile
from relaxlab.solver import GridSpec, TimeControl, run_relaxation


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--t-end", type=float, default=0.05)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    m = args.cells
    U = rng.standard_normal((m, 3))
    F = rng.standard_normal((m, 3))
    s = np.abs(rng.standard_normal(m))
    target = rng.standard_normal((m, 1))
    avail = kernels.backends()
    print(f"cells={m}  backends={sorted(avail)}")
    print(f"{'kernel':<22}" + "".join(f"{b:>14}" for b in avail))
    for name, call in [
        ("rusanov_divergence", lambda k: k.rusanov_divergence(U, F, s, 1.0 / m)),
        ("relax_exact", lambda k: k.relax_exact(U, target, (2,), 0.5)),
        ("max_jump", lambda k: k.max_jump(U, 1.0 / m)),
    ]:
        row = [best_of(lambda: call(k), args.repeat) for k in avail.values()]
        print(f"{name:<22}" + "".join(f"{t * 1e6:>12.1f}us" for t in row))

    model = build_elasticity()
    ic = well_prepared_ic(model, initial_profile(model, "sine", 0.1, 1))
    grid = GridSpec(0.0, 1.0, m)
    tc = TimeControl(args.t_end)
    results = {}
    for b in avail:
        prev = kernels.use(b)
        try:
            t0 = time.perf_counter()
            run = run_relaxation(model, grid, ic, tc, 1e-3, [args.t_end], series="none")
            results[b] = (time.perf_counter() - t0, run.snapshots[-1].data)
        finally:
            kernels.use(prev)
    print(f"{'full run (' + str(run.steps) + ' steps)':<22}"
          + "".join(f"{results[b][0] * 1e3:>12.1f}ms" for b in avail))
    if len(results) == 2:
        diff = np.max(np.abs(results["cython"][1] - results["python"][1]))
        print(f"max |cython - python| after the run: {diff:.2e}")


if __name__ == "__main__":
    main()
