"""Time the compiled and numpy stepping kernels on the same state.

    python benchmarks/bench_kernels.py [--nx 16384] [--steps 200] [--repeat 3]

Reports seconds per step for each backend, the speed-up, and the largest
amplitude difference between the two results.
"""

import argparse
import time

import numpy as np

from kleinbarrier import _kernels_py
from kleinbarrier import wavepacket as W
from kleinbarrier.kinematics import DoubleBarrierSpec, ParticleSpec


def setup(nx):
    particle = ParticleSpec(1.0)
    spec = DoubleBarrierSpec(4.0, 10.0, 16.8, 10.0)
    cfg = W.SimConfig()
    grid = W.Grid1D.centered_on(spec, 1000.0, nx)
    state = W.init_packet(grid, particle, cfg, spec)
    v = np.ascontiguousarray(W.smooth_potential(spec, grid.x))
    return particle, cfg, grid, state, v


def time_backend(fn, nx, steps, repeat):
    particle, cfg, grid, state, v = setup(nx)
    best = np.inf
    for _ in range(repeat):
        u, w = state.upper.copy(), state.lower.copy()
        t0 = time.perf_counter()
        fn(u, w, v, grid.spacing, cfg.dt, particle.mass, steps, cfg.tol, cfg.n_max, False, np.empty(0))
        best = min(best, time.perf_counter() - t0)
    return best / steps, u, w


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nx", type=int, default=2**14)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    results = {"python": time_backend(_kernels_py.taylor_steps, args.nx, args.steps, args.repeat)}
    try:
        from kleinbarrier import _kernels
    except ImportError:
        print("compiled extension not built; timing the numpy kernel only")
    else:
        results["cython"] = time_backend(_kernels.taylor_steps, args.nx, args.steps, args.repeat)

    print(f"nx={args.nx} steps={args.steps} repeat={args.repeat}")
    for name, (per_step, _, _) in results.items():
        print(f"{name:>7}: {per_step * 1e3:9.3f} ms/step")
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        diff = max(np.max(np.abs(py[1] - cy[1])), np.max(np.abs(py[2] - cy[2])))
        print(f"speed-up: {py[0] / cy[0]:.1f}x, max |difference|: {diff:.2e}")


if __name__ == "__main__":
    main()
